//! Named, config-driven experiments with JSON, CSV and SVG output.

mod config;
mod scenarios;
mod suite;

pub use config::{ExperimentConfig, FieldSpec, OdeSpec, Scenario, ShapeSpec};
pub use suite::{random_cases, run_case, CaseResult, OracleRow, RandomCase};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::BoundReport;
use crate::error::{FluxError, Result};

/// A bound report tagged with the seed and resolution that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    #[serde(flatten)]
    pub report: BoundReport,
    pub seed: u64,
    pub resolution: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub name: String,
    pub svg: String,
}

/// What a scenario body produces before it is stamped into a report.
#[derive(Clone, Debug, Default)]
pub(crate) struct Outcome {
    pub checks: Vec<CheckRecord>,
    pub tables: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub figures: Vec<Figure>,
}

impl Outcome {
    pub fn check(&mut self, report: BoundReport, seed: u64, resolution: f64) {
        self.checks.push(CheckRecord {
            report,
            seed,
            resolution,
        });
    }

    pub fn table(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("table serializes");
        self.tables.insert(name.to_string(), v);
    }

    pub fn figure(&mut self, name: &str, svg: String) {
        self.figures.push(Figure {
            name: name.to_string(),
            svg,
        });
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub tool_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckRecord>,
    pub figures: Vec<String>,
    pub tables: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub svgs: Vec<Figure>,
}

impl RunReport {
    /// Proven bounds reported VIOLATED on unflagged configurations.
    pub fn gating_violations(&self) -> Vec<&BoundReport> {
        self.checks
            .iter()
            .map(|c| &c.report)
            .filter(|r| r.is_gating_violation())
            .collect()
    }

    /// 0 when nothing gates, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.gating_violations().is_empty() {
            0
        } else {
            1
        }
    }

    /// `check_id,label,lhs,rhs,slack,verdict,seed,resolution`.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| FluxError::Runtime(format!("csv: {e}"));
        w.write_record([
            "check_id",
            "label",
            "lhs",
            "rhs",
            "slack",
            "verdict",
            "seed",
            "resolution",
        ])
        .map_err(csv_err)?;
        for c in &self.checks {
            let r = &c.report;
            w.write_record([
                r.inequality_id.as_str().to_string(),
                r.label.clone(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.slack.to_string(),
                r.verdict.to_string(),
                c.seed.to_string(),
                c.resolution.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| FluxError::Runtime(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json`, `summary.csv` and the figures into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: &str| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p);
            Ok(())
        };
        put("report.json", &self.to_json())?;
        put("summary.csv", &self.summary_csv()?)?;
        for f in &self.svgs {
            put(&f.name, &f.svg)?;
        }
        Ok(written)
    }
}

/// Runs the scenario named in `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let outcome = match config.dimension {
        2 => scenarios::dispatch::<2>(config)?,
        3 => scenarios::dispatch::<3>(config)?,
        d => return Err(FluxError::ConfigInvalid(format!("dimension must be 2 or 3, got {d}"))),
    };
    Ok(RunReport {
        scenario: config.scenario,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash_hex(),
        config: config.clone(),
        checks: outcome.checks,
        figures: outcome.figures.iter().map(|f| f.name.clone()).collect(),
        tables: outcome.tables,
        notes: outcome.notes,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        svgs: outcome.figures,
    })
}

/// Process exit code for a failed run: 2 for configuration errors, 3 otherwise.
pub fn error_exit_code(err: &FluxError) -> i32 {
    match err {
        FluxError::ConfigInvalid(_) => 2,
        _ => 3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioInfo {
    pub scenario: Scenario,
    pub anchor: &'static str,
    pub description: &'static str,
}

impl std::fmt::Display for ScenarioInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} → {}: {}", self.scenario, self.anchor, self.description)
    }
}

/// Every scenario with the statement it reproduces.
pub fn list_scenarios() -> Vec<ScenarioInfo> {
    let info = |scenario, anchor, description| ScenarioInfo {
        scenario,
        anchor,
        description,
    };
    vec![
        info(
            Scenario::Verify,
            "Corollary 'main result'",
            "flux bounds THM1, THM2, COR3 and GENERAL_EQ5 on a given or randomized pair of domains",
        ),
        info(
            Scenario::CombStudy,
            "Example 'tight bounds-1'",
            "comb pairs whose clipped normal integral approaches half the perimeter",
        ),
        info(
            Scenario::ImmersionCounterexample,
            "Example 'need_stokes-1'",
            "an m-fold immersed circle breaks the normal-integral bound",
        ),
        info(
            Scenario::ConvexProbe,
            "Theorem 'convex-theorem'",
            "claimed and proof-derived diameter bounds for a convex D2",
        ),
        info(
            Scenario::OffsetStudy,
            "Prop. 'epsilon-approx'",
            "volume, area and flux of level-set offsets as the offset shrinks",
        ),
        info(
            Scenario::MeasureLimit,
            "Theorem 'surface limit'",
            "ball-localized mean normals of combs with growing perimeter",
        ),
        info(
            Scenario::OdeAudit,
            "Corollary '2d_cor'",
            "masked displacement of a closed orbit in random disks, and a recurrence probe",
        ),
        info(
            Scenario::DivergenceCheck,
            "Lemma 'divergence-with-corners'",
            "boundary flux against the volume integral of the divergence",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_complete_and_ordered() {
        let cat = list_scenarios();
        assert_eq!(cat.len(), 8);
        let order: Vec<Scenario> = cat.iter().map(|i| i.scenario).collect();
        assert_eq!(order, Scenario::ALL.to_vec());
        let text: Vec<String> = cat.iter().map(|i| i.to_string()).collect();
        assert!(text
            .iter()
            .any(|l| l.starts_with("comb-study → Example 'tight bounds-1'")));
        assert!(text
            .iter()
            .any(|l| l.starts_with("measure-limit → Theorem 'surface limit'")));
    }

    #[test]
    fn config_errors_exit_two() {
        let err = ExperimentConfig::from_json(r#"{"scenario": "verify"}"#).unwrap_err();
        assert_eq!(error_exit_code(&err), 2);
        assert_eq!(error_exit_code(&FluxError::Runtime("x".into())), 3);
    }
}
