use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use diagbench_cli::config::{Command as Cmd, ExperimentConfig, GroupConfig, GroupName, HostConfig, HostKind};

fn diagbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diagbench")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn verify_diagonal_monomial_three() {
    let out = diagbench(&["verify-diagonal", "--n", "3", "--group", "monomial"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["command"], "verify-diagonal");
    assert_eq!(r["rows"][0]["group_order"], 48);
    assert_eq!(r["rows"][0]["exact_equal"], true);
}

#[test]
fn sign_flip_diagonal_fails_with_exit_one() {
    let out = diagbench(&["verify-diagonal", "--n", "2", "--group", "sign-flips"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "fail");
    let out = diagbench(&["irreducible", "--n", "3", "--group", "sign-flips"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["rows"][0]["span_rank"], 3);
}

#[test]
fn converge_harmonic_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("curve.csv");
    let out = diagbench(&[
        "converge",
        "--host",
        "lp",
        "--p",
        "2",
        "--dim",
        "32",
        "--operator",
        "harmonic-diag",
        "--schedule",
        "2,4,8,16",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let n_col = headers.iter().position(|h| h == "n").unwrap();
    let pi_col = headers.iter().position(|h| h == "pi_defect").unwrap();
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for (row, n) in rows.iter().zip([2.0, 4.0, 8.0, 16.0]) {
        assert_eq!(row[n_col].parse::<f64>().unwrap(), n);
        let pi: f64 = row[pi_col].parse().unwrap();
        assert!((pi - 1.0 / (n + 1.0)).abs() <= 1e-12, "{pi}");
    }
}

#[test]
fn construct_models_pass() {
    for args in [
        vec!["construct", "--model", "direct-sum", "--m", "2", "--k", "2"],
        vec!["construct", "--model", "cutdown", "--m", "3", "--k", "1"],
        vec!["construct", "--model", "hyperplane"],
        vec!["construct", "--model", "ideal", "--m", "2", "--k", "3", "--block", "1"],
    ] {
        let out = diagbench(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(json(&out)["verdict"], "pass");
    }
    let hyper = json(&diagbench(&["construct", "--model", "hyperplane"]));
    assert_eq!(hyper["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn certify_a_lp_truncation() {
    let out = diagbench(&["certify-a", "--host", "lp", "--p", "2", "--dim", "8", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|row| (as_f64(&row["a_iii_upper"]) - 1.0).abs() < 1e-12));
    assert_eq!(r["probes"]["seed"], 7);
    assert_eq!(r["probes"]["vectors"].as_array().unwrap().len(), 8 + 1 + 8);
}

#[test]
fn certify_a_lorentz_reports_structural_bound() {
    let out = diagbench(&["certify-a", "--host", "lorentz", "--p", "2", "--dim", "6", "--alpha", "0.5"]);
    let r = json(&out);
    let rows = r["rows"].as_array().unwrap();
    assert!(rows.iter().all(|row| row["a_ii"].is_null() && row["a_iii_source"] == "structural"));
    assert_eq!(r["summary"]["a_ii_certified"], false);
    assert!((as_f64(&r["summary"]["structural_constants"]["m"]) - 1.0).abs() < 1e-9);
}

#[test]
fn certify_a_dissection_bounds_hold_but_verdict_is_literal() {
    let out = diagbench(&["certify-a", "--host", "dissection", "--p", "1.5", "--dim", "8"]);
    let r = json(&out);
    assert!(r["rows"].as_array().unwrap().iter().all(|row| as_f64(&row["a_iii_upper"]) <= 1.0 + 1e-9));
    let code = out.status.code().unwrap();
    assert_eq!(code, if r["verdict"] == "pass" { 0 } else { 1 });
}

#[test]
fn infinite_exponent_round_trips() {
    let out = diagbench(&["certify-a", "--host", "lp", "--p", "inf", "--dim", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["config"]["host"]["p"], "inf");
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        vec!["verify-diagonal", "--n", "3", "--group", "bogus"],
        vec!["certify-a", "--host", "lp", "--p", "0.5", "--dim", "3"],
        vec!["converge", "--dim", "4", "--schedule", "8"],
        vec!["certify-a", "--host", "dissection", "--dim", "6"],
        vec!["certify-a", "--host", "lp", "--dim", "4", "--group", "sign-flips"],
        vec!["construct", "--model", "ideal", "--m", "2", "--k", "2", "--block", "2"],
        vec!["irreducible", "--group", "monomial"],
        vec!["converge", "--host", "weighted-lp", "--dim", "2", "--weights", "1,2"],
        vec!["certify-a", "--host", "weighted-lp", "--dim", "2", "--weights", "1,2"],
    ] {
        let out = diagbench(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(diagbench(&[]).status.code(), Some(2));
    assert_eq!(diagbench(&["--help"]).status.code(), Some(0));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let args = ["converge", "--dim", "12", "--operator", "random-compact", "--schedule", "2,4,8", "--seed", "5"];
    let a = diagbench(&args);
    let b = diagbench(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other =
        diagbench(&["converge", "--dim", "12", "--operator", "random-compact", "--schedule", "2,4,8", "--seed", "6"]);
    assert_ne!(a.stdout, other.stdout);

    let c = ["certify-a", "--host", "lorentz", "--p", "1.5", "--dim", "5", "--seed", "9"];
    let first = diagbench(&c);
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, diagbench(&c).stdout);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new(Cmd::CertifyA);
    config.host = Some(HostConfig { kind: HostKind::Lp, p: 1.5, dim: 4, weights: None, alpha: None });
    config.group = Some(GroupConfig { kind: GroupName::CyclicMonomial, n: None, generators_file: None });
    config.seed = 3;
    let path = dir.path().join("config.json");
    fs::write(&path, config.to_json()).unwrap();
    let from_file = diagbench(&["--config", path.to_str().unwrap()]);
    let from_flags = diagbench(&["certify-a", "--host", "lp", "--p", "1.5", "--dim", "4", "--seed", "3"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);

    let both = diagbench(&["--config", path.to_str().unwrap(), "construct", "--model", "hyperplane"]);
    assert_eq!(both.status.code(), Some(2));
    fs::write(&path, r#"{"command": "construct", "unknown": 1}"#).unwrap();
    assert_eq!(diagbench(&["--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(diagbench(&["--config", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = diagbench(&["irreducible", "--n", "4", "--group", "cyclic-monomial", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["rows"][0]["span_rank"], 16);
    assert_eq!(r["config"]["output"]["json"], path.to_str().unwrap());
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no-such-dir").join("report.json");
    let out = diagbench(&["irreducible", "--n", "2", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn group_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("group.json");
    // Full 3-cycle with one sign flip: the cyclic-monomial group.
    fs::write(&path, r#"{"n": 3, "generators": [{"perm": [2, 3, 1], "signs": [1, 1, 1]}, {"perm": [1, 2, 3], "signs": [-1, 1, 1]}]}"#)
        .unwrap();
    let out = diagbench(&["verify-diagonal", "--group-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rows"][0]["group_order"], 24);
    fs::write(&path, r#"{"n": 2, "generators": [{"perm": [0, 1], "signs": [1, 1]}]}"#).unwrap();
    assert_eq!(diagbench(&["irreducible", "--group-file", path.to_str().unwrap()]).status.code(), Some(2));
    assert!(Path::new(&path).exists());
}

#[test]
fn floats_use_seventeen_digits() {
    let out = diagbench(&["converge", "--dim", "8", "--schedule", "2,4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"tolerance\": 1.0000000000000001e-9"));
    let r: Value = serde_json::from_str(&text).unwrap();
    let pi = r["rows"][0]["pi_defect"].to_string();
    let mantissa = pi.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{pi}");
}
