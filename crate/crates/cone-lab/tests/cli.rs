use std::path::Path;
use std::process::Command;

use cone_lab::cli::config::ExperimentConfig;
use cone_lab::cli::{export, ops, store};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cone-lab"));
    c.env_remove("CONE_LAB_SEED");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn entropy_config(dir: &Path) -> String {
    format!(
        r#"{{"model": {{"kind": "HalfPlane", "a": 1.0}}, "op": "entropy_estimate", "params": {{"s_max": 6}}, "seed": 5, "output": "{}"}}"#,
        dir.join("store.jsonl").display()
    )
}

#[test]
fn identical_configs_give_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&entropy_config(dir.path())).unwrap();
    let a = ops::run(&cfg, None).unwrap();
    let b = ops::run(&cfg, None).unwrap();
    assert_eq!(a.output_hash, b.output_hash);
    assert_eq!(a.values, b.values);
    assert!(a.passed);
    let h = a.values.iter().find(|v| v.name == "h_est").unwrap();
    assert!((h.value - 1.0).abs() <= 0.05);
    assert_eq!(store::read_all(&cfg.output).unwrap().len(), 2);
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"model": {{"kind": "Warped", "epsilon": 0.1, "frequency": 1.0, "base_rate": 1.0}}, "op": "laplace_G", "params": {{"offsets": [1.0, 0.5]}}, "workers": 1, "output": "{}"}}"#,
        dir.path().join("s.jsonl").display()
    );
    let one = ExperimentConfig::parse(&body).unwrap();
    let four = ExperimentConfig { workers: 4, ..one.clone() };
    let (a, b) = (ops::run(&one, None).unwrap(), ops::run(&four, None).unwrap());
    assert_eq!(a.values, b.values);
    assert_eq!(a.report, b.report);
}

#[test]
fn malformed_json_exits_2_without_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\"model\": ");
    let out = bin().current_dir(dir.path()).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("results.jsonl").exists());

    let unknown = write_config(dir.path(), "unknown.json", r#"{"model": {"kind": "HalfPlane", "a": 1.0}, "op": "nope"}"#);
    let out = bin().current_dir(dir.path()).arg("run").arg(&unknown).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("results.jsonl").exists());
}

#[test]
fn seed_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", &entropy_config(dir.path()));
    let status = bin().arg("run").arg(&cfg).env("CONE_LAB_SEED", "41").output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let status = bin().arg("run").arg(&cfg).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let recs = store::read_all(&dir.path().join("store.jsonl")).unwrap();
    assert_eq!(recs[0]["seed"], 41);
    assert_eq!(recs[1]["seed"], 5);
    assert_ne!(recs[0]["config_hash"], recs[1]["config_hash"]);
}

#[test]
fn failed_checks_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    // A band of 1 cannot hold once heights vary.
    let body = format!(
        r#"{{"model": {{"kind": "HalfPlane", "a": 1.0}}, "op": "crit_ratio", "params": {{"band": 1.0, "offsets": [1.0, 0.5]}}, "output": "{}"}}"#,
        dir.path().join("s.jsonl").display()
    );
    let cfg = write_config(dir.path(), "c.json", &body);
    let status = bin().arg("run").arg(&cfg).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
    let recs = store::read_all(&dir.path().join("s.jsonl")).unwrap();
    assert_eq!(recs[0]["passed"], false);
}

#[test]
fn export_tables_and_empty_queries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&entropy_config(dir.path())).unwrap();
    ops::run(&cfg, None).unwrap();
    let out = dir.path().join("csv");
    let files = export::export(&cfg.output, "op=entropy_estimate && model.kind=HalfPlane", &out).unwrap();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,log_V_s,model"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 6);
    // V_1 on the unit-rate half-plane counts the closed-ball net of length 2e.
    let v1: f64 = rows[0][1].parse::<f64>().unwrap().exp();
    assert_eq!(v1.round(), ((2.0 * std::f64::consts::E + 1e-9).floor() + 1.0));

    let empty = dir.path().join("none");
    let err = export::export(&cfg.output, "op=laplace_G", &empty).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!empty.exists());

    let status = bin()
        .args(["export", "--query", "op=entropy_estimate", "--out"])
        .arg(dir.path().join("cli_csv"))
        .arg("--store")
        .arg(&cfg.output)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("cli_csv/entropy_estimate.csv").exists());
}

#[test]
fn verify_all_on_broken_model_fails_models_first() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_config(dir.path(), "m.json", r#"{"kind": "Diagonal", "rates": [1.0, 3.0], "a": 2.0}"#);
    let out = bin().args(["verify-all", "--model"]).arg(&spec).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("models") && rows[0].contains("FAIL"), "{text}");
    assert!(rows[1..].iter().all(|r| r.contains("SKIP")), "{text}");
}
