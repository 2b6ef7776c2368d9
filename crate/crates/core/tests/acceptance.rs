use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde_json::Value;

use fluxgauge_core::bounds::{
    check_measure_lemma, instance_rng, random_instance, DiscreteInstance, Flag, InequalityId, Verdict,
};
use fluxgauge_core::runner::{run, ExperimentConfig, RunReport, Scenario};

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(text: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").unwrap();
    out.flush().unwrap();
}

fn config(scenario: Scenario, dimension: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(scenario);
    cfg.dimension = dimension;
    cfg.seed = 20240611;
    cfg
}

fn run_ok(cfg: &ExperimentConfig) -> RunReport {
    run(cfg).unwrap_or_else(|e| panic!("{} failed: {e}", cfg.scenario))
}

fn all_hold(report: &RunReport, id: InequalityId) -> (usize, usize) {
    let of_id: Vec<_> = report.checks.iter().filter(|c| c.report.inequality_id == id).collect();
    let holds = of_id.iter().filter(|c| c.report.verdict == Verdict::Holds).count();
    (holds, of_id.len())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed < Duration::from_secs(limit_s)
}

fn divergence_residuals() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let (mut worst, mut min_order, mut rows_seen) = (0.0f64, f64::INFINITY, 0);
    for dim in [2, 3] {
        let report = run_ok(&config(Scenario::DivergenceCheck, dim));
        let (holds, total) = all_hold(&report, InequalityId::DIV_THEOREM);
        pass &= total == 15 && holds == total;
        for row in report.tables["divergence"].as_array().unwrap() {
            rows_seen += 1;
            let rel = f(&row["relative_residual"]);
            worst = worst.max(rel);
            pass &= rel <= 0.01;
            if let Some(order) = row["order"].as_f64() {
                min_order = min_order.min(order);
                pass &= order >= 1.0;
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= rows_seen == 30 && within(elapsed, 120);
    Outcome {
        pass,
        detail: format!(
            "30 domain/field pairs, max relative residual {worst:.2e}, min order {min_order:.2}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn verify_config(dim: usize) -> ExperimentConfig {
    let mut cfg = config(Scenario::Verify, dim);
    cfg.random_configs = 50;
    cfg
}

fn proven_suite(csv: &mut BTreeMap<String, String>) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for dim in [2, 3] {
        let report = run_ok(&verify_config(dim));
        let non_holding = report
            .checks
            .iter()
            .filter(|c| c.report.verdict != Verdict::Holds)
            .count();
        let (thm2, _) = all_hold(&report, InequalityId::THM2);
        let oracle = report.tables["oracle"].as_array().unwrap();
        let agree = oracle.iter().filter(|r| r["agrees"].as_bool() == Some(true)).count();
        pass &= non_holding == 0 && oracle.len() == 50 && agree == 50;
        parts.push(format!(
            "d={dim}: {} checks HOLDS ({thm2} div-free), oracle {agree}/{}",
            report.checks.len() - non_holding,
            oracle.len()
        ));
        csv.insert(format!("verify-{dim}"), report.summary_csv().unwrap());
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 300);
    Outcome {
        pass,
        detail: format!("{}, {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    }
}

fn comb_tightness() -> Outcome {
    let start = Instant::now();
    let report = run_ok(&config(Scenario::CombStudy, 2));
    let rows = report.tables["comb"].as_array().unwrap();
    let mut pass = rows.len() == 3;
    let mut ratios = Vec::new();
    for row in rows {
        let n = f(&row["n"]);
        let perimeter = f(&row["perimeter"]);
        let normal = f(&row["normal_integral"]).abs();
        pass &= ((perimeter - (2.0 * n + 2.0)) / (2.0 * n + 2.0)).abs() <= 0.15;
        pass &= ((normal - n) / n).abs() <= 0.15;
        ratios.push(f(&row["ratio"]));
    }
    pass &= ratios.windows(2).all(|w| w[1] > w[0]);
    pass &= ratios.last().is_some_and(|r| *r >= 0.7);
    let elapsed = start.elapsed();
    pass &= within(elapsed, 120) && report.exit_code() == 0;
    Outcome {
        pass,
        detail: format!("ratios {ratios:.3?}, {:.1}s", elapsed.as_secs_f64()),
    }
}

fn immersion_counterexample() -> Outcome {
    let start = Instant::now();
    let report = run_ok(&config(Scenario::ImmersionCounterexample, 2));
    let cor3 = report
        .checks
        .iter()
        .map(|c| &c.report)
        .find(|r| r.inequality_id == InequalityId::COR3)
        .expect("immersion emits COR3");
    let m = 10.0;
    let elapsed = start.elapsed();
    let pass = cor3.lhs >= 0.9 * m * 2.0
        && cor3.lhs > cor3.rhs
        && cor3.has_flag(Flag::NotARegularDomain)
        && report.exit_code() == 0
        && within(elapsed, 60);
    Outcome {
        pass,
        detail: format!(
            "|normal integral| {:.4} vs half boundary area {:.4}, flagged, exit {}, {:.1}s",
            cor3.lhs,
            cor3.rhs,
            report.exit_code(),
            elapsed.as_secs_f64()
        ),
    }
}

fn convex_probe() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (dim, target, tol) in [(2, 2.0, 0.01), (3, PI, 0.01 * PI)] {
        let report = run_ok(&config(Scenario::ConvexProbe, dim));
        let by_id = |id: InequalityId| {
            report
                .checks
                .iter()
                .map(|c| &c.report)
                .find(|r| r.inequality_id == id)
                .expect("probe emits the check")
        };
        let claimed = by_id(InequalityId::THM4_CLAIMED);
        let derived = by_id(InequalityId::THM4_PROOF_DERIVED);
        pass &= (derived.lhs - target).abs() <= tol;
        pass &= derived.verdict == Verdict::Holds && derived.slack.abs() <= 0.01 * derived.rhs;
        pass &= claimed.verdict == Verdict::Violated;
        pass &= report.exit_code() == 0;
        parts.push(format!(
            "d={dim}: lhs {:.6}, derived slack {:.2e}, claimed {}",
            derived.lhs, derived.slack, claimed.verdict
        ));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 60);
    Outcome {
        pass,
        detail: format!("{}, {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    }
}

fn offset_convergence() -> Outcome {
    let start = Instant::now();
    let report = run_ok(&config(Scenario::OffsetStudy, 2));
    let studies: Vec<(&String, &Value)> = report.tables.iter().filter(|(k, _)| k.starts_with("offset|")).collect();
    let mut pass = studies.len() == 2;
    let mut parts = Vec::new();
    for (name, study) in &studies {
        let rates = [f(&study["volume_rate"]), f(&study["area_rate"]), f(&study["flux_rate"])];
        pass &= study["monotone"].as_bool() == Some(true);
        pass &= rates.iter().all(|r| *r >= 0.8);
        pass &= study["rows"].as_array().map(Vec::len) == Some(3);
        parts.push(format!("{}: rates {rates:.3?}", name.trim_start_matches("offset|")));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 120);
    Outcome {
        pass,
        detail: format!("{}, {:.1}s", parts.join("; "), elapsed.as_secs_f64()),
    }
}

fn surface_limit(csv: &mut BTreeMap<String, String>) -> Outcome {
    let start = Instant::now();
    let report = run_ok(&config(Scenario::MeasureLimit, 2));
    let (holds, total) = all_hold(&report, InequalityId::COR3);
    let ratios: Vec<f64> = report.tables["decay_ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(f)
        .collect();
    let elapsed = start.elapsed();
    let pass =
        total == 27 && holds == total && ratios.len() == 2 && ratios.iter().all(|r| *r >= 1.7) && within(elapsed, 120);
    csv.insert("measure-limit".into(), report.summary_csv().unwrap());
    Outcome {
        pass,
        detail: format!(
            "{holds}/{total} ball means dominated, decay ratios {ratios:.2?}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn planar_corollary(csv: &mut BTreeMap<String, String>) -> Outcome {
    let start = Instant::now();
    let report = run_ok(&config(Scenario::OdeAudit, 2));
    let (holds, total) = all_hold(&report, InequalityId::COR_2D);
    let probe = &report.tables["probe"];
    let r0 = f(&probe["radius"]);
    let rows = probe["rows"].as_array().unwrap();
    let worst = rows.iter().map(|r| f(&r["magnitude"])).fold(0.0, f64::max);
    let growth = f(&report.tables["residence_growth"]);
    let elapsed = start.elapsed();
    let pass = total == 100
        && holds == total
        && rows.len() == 3
        && worst <= PI * r0 + 1e-3
        && growth >= 4.0
        && within(elapsed, 120);
    csv.insert("ode-audit".into(), report.summary_csv().unwrap());
    Outcome {
        pass,
        detail: format!(
            "{holds}/{total} disks within half perimeter, probe max {worst:.4} vs {:.4}, residence growth {growth:.1}, {:.1}s",
            PI * r0 + 1e-3,
            elapsed.as_secs_f64()
        ),
    }
}

fn measure_lemma() -> Outcome {
    let start = Instant::now();
    let mut rng = instance_rng(11);
    let failures = (0..1000)
        .filter(|_| !check_measure_lemma(&random_instance(&mut rng, 24)).holds())
        .count();
    let one = |n: i64| Ratio::from_integer(n);
    let tight = check_measure_lemma(&DiscreteInstance {
        weights: vec![one(1), one(1)],
        values: vec![one(1), one(-1)],
        u: vec![true, true],
        v: vec![true, false],
    });
    let [diff, inter] = tight.reports("tight");
    let tight_ok = tight.holds() && diff.slack == 0.0 && inter.slack == 0.0;
    let elapsed = start.elapsed();
    Outcome {
        pass: failures == 0 && tight_ok && within(elapsed, 10),
        detail: format!(
            "1000 rational instances, {failures} failures, tight two-point slack {}, {:.2}s",
            diff.slack,
            elapsed.as_secs_f64()
        ),
    }
}

fn determinism(first: &BTreeMap<String, String>) -> Outcome {
    let mut second = BTreeMap::new();
    for dim in [2, 3] {
        second.insert(
            format!("verify-{dim}"),
            run_ok(&verify_config(dim)).summary_csv().unwrap(),
        );
    }
    second.insert(
        "measure-limit".into(),
        run_ok(&config(Scenario::MeasureLimit, 2)).summary_csv().unwrap(),
    );
    second.insert(
        "ode-audit".into(),
        run_ok(&config(Scenario::OdeAudit, 2)).summary_csv().unwrap(),
    );
    let same: Vec<&String> = second.keys().filter(|k| first.get(*k) == second.get(*k)).collect();
    Outcome {
        pass: first.len() == 4 && same.len() == 4,
        detail: format!("{}/4 summary.csv files byte-identical", same.len()),
    }
}

#[test]
fn acceptance_criteria() {
    let mut csv = BTreeMap::new();
    let mut results = Vec::new();
    let mut record = |name: &str, o: Outcome| {
        line(&format!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        ));
        results.push((name.to_string(), o.pass));
    };
    record("1 divergence residual", divergence_residuals());
    record("2 proven-bound suite", proven_suite(&mut csv));
    record("3 comb tightness", comb_tightness());
    record("4 immersion counterexample", immersion_counterexample());
    record("5 convex probe", convex_probe());
    record("6 offset convergence", offset_convergence());
    record("7 surface limit", surface_limit(&mut csv));
    record("8 planar corollary and probe", planar_corollary(&mut csv));
    record("9 measure lemma", measure_lemma());
    record("10 determinism", determinism(&csv));
    let failed: Vec<&String> = results.iter().filter(|(_, ok)| !ok).map(|(n, _)| n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
