use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn run(config: &Value, dir: &Path, extra: &[&str]) -> (i32, Option<Value>) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, serde_json::to_string(config).unwrap()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_toruslab"))
        .args(extra)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .env("TORUSLAB_THREADS", "1")
        .output()
        .unwrap();
    let code = status.status.code().unwrap();
    let name = config.get("command").and_then(Value::as_str).or(extra.first().copied()).unwrap_or("");
    let report = std::fs::read_to_string(dir.join(format!("{name}.json"))).ok().map(|s| serde_json::from_str(&s).unwrap());
    (code, report)
}

#[test]
fn gramian_on_full_torus_is_one_over_t() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "command": "gramian",
        "potential": {"random": {"seed": 3, "cutoff": 2, "tail": 0.5, "l2": 1.0}},
        "cutoff": 3,
        "time": 2.0,
    });
    let (code, report) = run(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let report = report.unwrap();
    assert!((report["summary"]["K"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(report["seeds"], json!([0, 3]));
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_geom_reports_small_q_min() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"command": "verify-geom", "params": {"epsilon": 0.0625, "threshold": 12}});
    let (code, report) = run(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(report.unwrap()["summary"]["Q_min"].as_u64().unwrap() <= 12);
}

#[test]
fn control_of_a_single_mode_reaches_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "command": "control",
        "initial": "mode(1,1)",
        "cutoff": 2,
        "time": 1.0,
        "region": [{"x0": 0.0, "x1": 3.14159, "y0": 0.0, "y1": 6.283185307179586}],
    });
    let (code, report) = run(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(report.unwrap()["summary"]["terminal_norm"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn csv_bodies_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = json!({"command": "scan-zygmund", "trials": 5, "seed": 11, "params": {"kappas": [1.0, 2.0], "hs": [0.125]}});
    assert_eq!(run(&cfg, a.path(), &[]).0, 0);
    assert_eq!(run(&cfg, b.path(), &[]).0, 0);
    let ca = std::fs::read(a.path().join("scan-zygmund.csv")).unwrap();
    let cb = std::fs::read(b.path().join("scan-zygmund.csv")).unwrap();
    assert_eq!(ca, cb);
    assert!(!ca.contains(&b'\r'));
}

#[test]
fn positional_command_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"params": {"direction": [0, 1], "start": [0.5, 0.0]}, "time": 6.283185307179586,
        "region": [{"x0": 0.0, "x1": 1.0, "y0": 0.0, "y1": 6.283185307179586}]});
    let (code, report) = run(&cfg, dir.path(), &["hitting"]);
    assert_eq!(code, 0);
    assert_eq!(report.unwrap()["summary"]["fraction"].as_f64().unwrap(), 1.0);
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&json!({"command": "teleport"}), dir.path(), &[]).0, 2);
    assert_eq!(run(&json!({"command": "gramian", "unknown_key": 1}), dir.path(), &[]).0, 2);
    assert_eq!(run(&json!({"command": "gramian", "time": -1.0}), dir.path(), &[]).0, 2);
    assert_eq!(run(&json!({"command": "control"}), dir.path(), &[]).0, 2);
    assert_eq!(run(&json!({"time": 1.0}), dir.path(), &["frobnicate"]).0, 2);
}

#[test]
fn coefficient_files_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("v.csv");
    std::fs::write(&file, "n1,n2,re,im\n1,0,0.5,0\n-1,0,0.5,0\n").unwrap();
    let cfg = json!({"command": "simulate", "potential": {"file": file}, "initial": "mode(0,1)", "cutoff": 3,
        "time": 0.5, "params": {"steps": 16}});
    let (code, report) = run(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let s = &report.unwrap()["summary"];
    assert!(s["norm_drift"].as_f64().unwrap() < 1e-10);
    assert!(s["split_step_error"].as_f64().unwrap() < 1e-2);
}
