use std::path::Path;
use std::process::{Command, Output};

fn gtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtm")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn generate_recover_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let rec = dir.path().join("rec");
    let out = gtm(&["generate", "--out", path(&data), "--n", "12", "--k", "3", "--m", "350", "--m2", "0", "--seed", "4", "--set", "mixture.xi=0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = gtm(&["recover", "--mode", "noisefree", "--phase1-in", path(&data.join("phase1")), "--out", path(&rec)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = gtm(&["eval", "--model", path(&data.join("model.cfg")), "--recovery", path(&rec)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["vertex_error"].as_f64().unwrap() <= 1e-6);
    assert!(report["dual_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn sweep_prints_the_csv() {
    let out = gtm(&["sweep", "--preset", "noisefree", "--jobs", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("mode,n,k,m,m2,sigma,seed,status"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn config_file_fills_sweep_axes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "sweep.seeds = 0..3\n").unwrap();
    let out = gtm(&["sweep", "--preset", "noisefree", "--config", path(&cfg)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
}

#[test]
fn flag_beats_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lb.cfg");
    let report = dir.path().join("lb.json");
    std::fs::write(&cfg, format!("n = 8\ntrials = 3\nout = {}\n", path(&report))).unwrap();
    assert!(gtm(&["lowerbound", "--config", path(&cfg), "--trials", "5"]).status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["n"], 8);
    assert_eq!(json["trials"], 5);
}

#[test]
fn selftest_and_lowerbound_pass() {
    let out = gtm(&["selftest", "--instances", "20", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(gtm(&["lowerbound", "--n", "16", "--k", "2", "--trials", "5"]).status.success());
}

#[test]
fn exit_codes() {
    assert_eq!(gtm(&["sweep", "--preset", "nonexistent"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    // fewer documents than the null space dimension
    let out = gtm(&["generate", "--out", path(&data), "--n", "6", "--k", "3", "--m", "2", "--m2", "0", "--seed", "1"]);
    assert!(out.status.success());
    let rec = dir.path().join("rec");
    let out = gtm(&["recover", "--mode", "noisefree", "--phase1-in", path(&data.join("phase1")), "--out", path(&rec)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(rec.join("error.json").exists());
}
