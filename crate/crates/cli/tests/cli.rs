//! End-to-end runs of the binary.

use std::io::Write;
use std::process::{Command, Output};

use collatz_koopman::Report;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collatz-koopman")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn without_elapsed(mut v: Value) -> Value {
    v["report"]["elapsed_secs"] = Value::Null;
    v
}

#[test]
fn verify_parity_passes() {
    let out = run(&["verify", "parity", "--k", "12"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn verify_isometry_passes() {
    assert!(run(&["verify", "isometry", "--k-max", "9"]).status.success());
}

#[test]
fn report_json_round_trips() {
    let v = json(&["verify", "isometry", "--k-max", "6"]);
    let report: Report = serde_json::from_value(v["report"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&report).unwrap(), v["report"]);
    assert!(report.passed());
}

#[test]
fn csv_table_has_header() {
    let out = run(&["--format", "csv", "parity", "--k", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,bits,row_value,y"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn csv_checks_without_table() {
    let out = run(&["--format", "csv", "verify", "parity", "--k", "6"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("command,check,status,measured,tolerance\n"));
    assert!(text.lines().skip(1).all(|l| l.contains(",pass,")));
}

#[test]
fn trajectory_of_seven() {
    let v = json(&["trajectory", "--n", "7"]);
    let rows = v["table"]["rows"].as_array().unwrap();
    assert_eq!(rows.first().unwrap()[1], "7");
    assert_eq!(rows.last().unwrap()[1], "2");
    assert_eq!(rows.len(), 11);
}

#[test]
fn unknown_module_fails() {
    let out = run(&["verify", "nope"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown module"));
}

#[test]
fn tolerance_override_fails_checks() {
    let out = run(&["--tol", "-1", "verify", "isometry", "--k-max", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn correlate_with_f0_is_within_bound() {
    let v = json(&["correlate", "--k-max", "6", "--word", "[[0,1,1,0],[1,1,0.5,0.5]]"]);
    let checks = v["report"]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "phi_within_truncation_bound" && c["status"] == "pass"));
}

#[test]
fn correlate_with_step_function_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, r#"{{"x":[1,2,3,5,9,17,33],"y":[0,1,2,3,4,5,6],"range_end":64}}"#).unwrap();
    let arg = format!("file:{}", file.path().display());
    let v = json(&["correlate", "--k-max", "4", "--f", &arg]);
    let checks = v["report"]["checks"].as_array().unwrap();
    let phi = checks.iter().find(|c| c["name"] == "phi_abs").unwrap();
    assert!(phi["measured"].as_f64().unwrap() > 1e-3);
}

#[test]
fn bad_step_function_file_is_an_error() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, r#"{{"x":[1,3,2],"y":[0,1,2]}}"#).unwrap();
    let arg = format!("file:{}", file.path().display());
    assert_eq!(run(&["correlate", "--f", &arg]).status.code(), Some(1));
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["verify", "koopman", "--n-max", "14", "--search-bound", "2000"];
    let one = json(&[&["--threads", "1"][..], &args].concat());
    let four = json(&[&["--threads", "4"][..], &args].concat());
    assert_eq!(without_elapsed(one), without_elapsed(four));
}
