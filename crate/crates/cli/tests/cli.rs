use std::process::{Command, Output};

use serde_json::Value;

fn ifeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifeq")).args(args).output().expect("binary runs")
}

fn json_out(args: &[&str]) -> Value {
    let out = ifeq(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn filter_for_two_tap_channel() {
    let v = json_out(&["filter", "--channel", "[1,0.9]", "--mode", "zf", "--nmax", "4"]);
    assert_eq!(v["filter"], serde_json::json!([1, 1]));
    let s = v["sigma2"].as_f64().unwrap();
    assert!((s - 2.0 / 1.9).abs() < 1e-9);
    assert_eq!(v["config"]["nmax"], 4);
}

#[test]
fn complex_channel_filter() {
    let v = json_out(&["filter", "--channel", "[[1,0],[0,0.9]]"]);
    assert_eq!(v["filter"], serde_json::json!([[1, 0], [0, 1]]));
}

#[test]
fn bound_for_half_tap() {
    let v = json_out(&["bound", "--channel", "[1,0.5]", "--nmax", "10"]);
    assert!((v["bound"].as_f64().unwrap() - 1.604).abs() < 1e-3);
    assert_eq!(v["n_star"], 2);
    assert!((v["gamma"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-9);
}

#[test]
fn analyze_reports_gap() {
    let v = json_out(&["analyze", "--channel", "[1]", "--snr", "30"]);
    assert!((v["gap_db"].as_f64().unwrap() - 1.533).abs() < 1e-3);
    assert_eq!(v["is_paley_wiener"], true);
}

#[test]
fn simulate_identity_channel() {
    let v = json_out(&["simulate", "--channel", "[1]", "--snr", "1000", "--trials", "100", "--code", "uncoded", "--q", "4"]);
    assert_eq!(v["ser"], 0.0);
    assert_eq!(v["symbol_errors"], 0);
    assert_eq!(v["config"]["q"], 4);
}

#[test]
fn alphabet_defaults_from_code_or_layers() {
    let base = ["simulate", "--channel", "[1,0.9]", "--snr", "30", "--trials", "20", "--code", "hamming74"];
    let v = json_out(&base);
    assert_eq!(v["config"]["q"], 2);
    let v = json_out(&[&base[..], &["--m", "3"]].concat());
    assert_eq!(v["config"]["q"], 8);
    assert_eq!(v["decoder"], "multilevel");
    let out = ifeq(&["simulate", "--channel", "[1,0.9]", "--snr", "30", "--code", "parity"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seeds_are_deterministic_and_results_round_trip() {
    let args = [
        "simulate", "--channel", "[1,0.9,0.2]", "--snr", "12", "--trials", "300", "--q", "4", "--seed", "5",
        "--block-length", "24",
    ];
    let mut a = json_out(&args);
    let mut b = json_out(&[&args[..], &["--threads", "1"]].concat());
    for v in [&mut a, &mut b] {
        v.as_object_mut().unwrap().remove("runtime_seconds");
    }
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("res.json");
    std::fs::write(&path, serde_json::to_string(&a).unwrap()).unwrap();
    let arg = format!("@{}", path.display());
    let mut c = json_out(&["simulate", "--config", &arg]);
    c.as_object_mut().unwrap().remove("runtime_seconds");
    assert_eq!(a, c);
}

#[test]
fn csv_outputs_have_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig.csv");
    let out = ifeq(&["fig-two-tap", "--a-min", "0.1", "--a-max", "0.9", "--a-step", "0.2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert!(lines[1].starts_with("# version: "));
    assert!(lines[2].starts_with("a,filter,gamma,gamma_db,analytic_gamma"));
    assert_eq!(lines.len(), 3 + 5);

    let out = ifeq(&["fig-random-pdf", "--p", "2", "--samples", "50", "--bins", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# median_db: p=2 "));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn complex_sweep_and_delay_check() {
    let out = ifeq(&["fig-two-tap-complex", "--grid", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // the corners of [-0.99, 0.99]² lie outside |a| <= 0.99
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5);
    let v = json_out(&["check-delay", "--a", "0.9", "--p", "1,4"]);
    assert_eq!(v["ok"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(ifeq(&["filter", "--bogus"]).status.code(), Some(2));
    assert_eq!(ifeq(&["filter", "--channel", "[1,"]).status.code(), Some(2));
    assert_eq!(ifeq(&["simulate", "--channel", "[1]", "--snr", "10", "--q", "4", "--trials", "0"]).status.code(), Some(2));
    let out = ifeq(&["filter", "--channel", "[1,1]"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unit circle"));
    assert_eq!(ifeq(&["--help"]).status.code(), Some(0));
}
