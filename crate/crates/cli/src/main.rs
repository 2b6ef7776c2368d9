use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fluxgauge_core::runner::{self, list_scenarios, ExperimentConfig, RunReport, Scenario};
use fluxgauge_core::FluxError;

const SCHEMA: &str = include_str!("../config.schema.json");

/// Runs a named flux experiment and writes report.json, summary.csv and SVG figures.
#[derive(Parser, Debug)]
#[command(name = "fluxgauge", version, about)]
struct Args {
    /// Scenario name, `list` for the catalog, or `schema` for the config schema.
    scenario: String,
    /// JSON experiment config; scenario defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: config `output_dir`, then `out`].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh and grid pitch.
    #[arg(long)]
    resolution: Option<f64>,
    /// Evaluate the planar corollary on curves that self-intersect.
    #[arg(long)]
    allow_non_simple: bool,
}

fn configure_threads() -> Result<(), FluxError> {
    let Ok(raw) = std::env::var("FLUXGAUGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        FluxError::ConfigInvalid(format!("FLUXGAUGE_THREADS must be a positive integer, got `{raw}`"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| FluxError::Runtime(format!("thread pool: {e}")))
}

fn load_config(args: &Args, scenario: Scenario) -> Result<ExperimentConfig, FluxError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.scenario != scenario {
                return Err(FluxError::ConfigInvalid(format!(
                    "config is for `{}` but `{scenario}` was requested",
                    cfg.scenario
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(scenario),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(h) = args.resolution {
        cfg.resolution = Some(h);
    }
    if args.allow_non_simple {
        cfg.allow_non_simple = true;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(report: &RunReport, dir: &std::path::Path) {
    for c in &report.checks {
        let r = &c.report;
        println!(
            "{:<26} {:<9} {}  lhs={:.6e} rhs={:.6e}",
            r.inequality_id.as_str(),
            r.verdict.to_string(),
            r.label,
            r.lhs,
            r.rhs
        );
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    let gating = report.gating_violations();
    for r in &gating {
        eprintln!(
            "gating violation: {} {} (lhs {} > rhs {})",
            r.inequality_id.as_str(),
            r.label,
            r.lhs,
            r.rhs
        );
    }
    println!(
        "{}: {} checks, {} gating violations, {:.2}s, written to {}",
        report.scenario,
        report.checks.len(),
        gating.len(),
        report.wall_clock_seconds,
        dir.display()
    );
}

fn execute(args: &Args) -> Result<i32, FluxError> {
    match args.scenario.as_str() {
        "list" => {
            for info in list_scenarios() {
                println!("{info}");
            }
            return Ok(0);
        }
        "schema" => {
            print!("{SCHEMA}");
            return Ok(0);
        }
        _ => {}
    }
    let scenario: Scenario = args.scenario.parse()?;
    let cfg = load_config(args, scenario)?;
    configure_threads()?;
    let report = runner::run(&cfg)?;
    let dir = PathBuf::from(cfg.output_dir.as_deref().unwrap_or("out"));
    report.write(&dir)?;
    print_summary(&report, &dir);
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fluxgauge: {e}");
            ExitCode::from(runner::error_exit_code(&e) as u8)
        }
    }
}
