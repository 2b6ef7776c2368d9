use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const CHORD: &str = r#"{
  "scenario": "verify",
  "d1": { "shape": "halfspace", "params": [0, -1, 0], "region": 3 },
  "d2": { "shape": "ball", "params": [0, 0, 1] }
}"#;

fn fluxgauge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluxgauge"))
        .args(args)
        .env("FLUXGAUGE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_names_every_anchor() {
    let out = fluxgauge(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("comb-study → Example 'tight bounds-1'"));
    assert!(text.contains("measure-limit → Theorem 'surface limit'"));
}

#[test]
fn chord_verify_passes_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "chord.json", CHORD);
    let out_dir = tmp.path().join("run");
    let out = fluxgauge(&[
        "verify",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out_dir);
    assert_eq!(rep["scenario"], "verify");
    assert_eq!(rep["config"]["seed"], 5);
    let checks = rep["checks"].as_array().unwrap();
    let ids: Vec<&str> = checks.iter().map(|c| c["inequality_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["THM1", "THM2", "COR3", "GENERAL_EQ5"]);
    assert!(checks.iter().all(|c| c["verdict"] == "HOLDS"));
    let csv = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("check_id,label,lhs,rhs,slack,verdict,seed,resolution\n"));
    for fig in rep["figures"].as_array().unwrap() {
        assert!(out_dir.join(fig.as_str().unwrap()).exists());
    }
}

#[test]
fn claimed_violations_do_not_fail_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "probe.json", &CHORD.replace("verify", "convex-probe"));
    let out_dir = tmp.path().join("probe");
    let out = fluxgauge(&["convex-probe", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out_dir);
    let verdict_of = |id: &str| {
        rep["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["inequality_id"] == id)
            .map(|c| c["verdict"].as_str().unwrap().to_string())
            .unwrap()
    };
    assert_eq!(verdict_of("THM4_CLAIMED"), "VIOLATED");
    assert_eq!(verdict_of("THM4_PROOF_DERIVED"), "HOLDS");
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write_config(tmp.path(), "empty.json", r#"{"scenario": "verify"}"#);
    assert_eq!(fluxgauge(&["verify", "--config", &empty]).status.code(), Some(2));
    let unknown = write_config(tmp.path(), "unknown.json", r#"{"scenario": "comb-study", "teeth": 4}"#);
    assert_eq!(fluxgauge(&["comb-study", "--config", &unknown]).status.code(), Some(2));
    let chord = write_config(tmp.path(), "chord.json", CHORD);
    assert_eq!(fluxgauge(&["comb-study", "--config", &chord]).status.code(), Some(2));
    assert_eq!(fluxgauge(&["no-such-scenario"]).status.code(), Some(2));
    let missing = tmp.path().join("missing.json");
    assert_eq!(
        fluxgauge(&["verify", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "comb.json",
        r#"{"scenario": "comb-study", "comb_teeth": [4, 8], "seed": 3}"#,
    );
    let runs: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let dir = tmp.path().join(name);
            let out = fluxgauge(&["comb-study", "--config", &cfg, "--out", dir.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0));
            std::fs::read_to_string(dir.join("summary.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn schema_is_published() {
    let out = fluxgauge(&["schema"]);
    assert_eq!(out.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(schema["additionalProperties"], false);
    assert_eq!(schema["properties"]["scenario"]["enum"].as_array().unwrap().len(), 8);
}
