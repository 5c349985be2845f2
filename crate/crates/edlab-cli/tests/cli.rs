//! Runs the built binary: exit codes, output formats and determinism.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn edlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edlab")).args(args).env_remove("EDLAB_JOBS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

/// Report checks with timing removed.
fn checks(v: &Value) -> Vec<Value> {
    let mut cs = v["checks"].as_array().unwrap().clone();
    for c in &mut cs {
        c.as_object_mut().unwrap().remove("wall_time");
    }
    cs
}

fn write_matrix(dir: &Path, name: &str, n: usize, re: Vec<Vec<f64>>, im: Vec<Vec<f64>>) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::json!({ "n": n, "re": re, "im": im }).to_string()).unwrap();
    path.display().to_string()
}

fn zeros(s: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; s]; s]
}

#[test]
fn algebra_report_schema() {
    let o = edlab(&["verify", "--suite", "algebra", "--n", "2", "--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["tool"], "edlab");
    assert_eq!(v["config"]["suite"], "algebra");
    assert_eq!(v["config"]["n"], 2);
    assert_eq!(v["summary"]["fail"], 0);
    let cs = checks(&v);
    assert_eq!(v["summary"]["pass"].as_u64().unwrap() as usize, cs.len());
    for c in &cs {
        for key in ["check_name", "paper_ref", "status", "residual_or_zscore", "tolerance", "samples"] {
            assert!(c.get(key).is_some(), "missing {key} in {c}");
        }
        assert_eq!(c["status"], "pass");
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["verify", "--suite", "algebra", "--n", "1"][..],
        &["verify", "--suite", "bogus"],
        &["verify", "--suite", "chart", "--fixture", "klein"],
        &["verify", "--suite", "algebra", "--tol", "-1"],
        &["verify", "--suite", "algebra", "--jobs", "0"],
        &["constants", "--n", "1"],
        &["classify", "--matrix", "/nonexistent/matrix.json"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&edlab(args)), 2, "{args:?}");
    }
}

#[test]
fn failing_checks_exit_1() {
    let o = edlab(&["verify", "--suite", "chart", "--fixture", "sphere3", "--tol", "1e-30"]);
    assert_eq!(code(&o), 1);
    assert!(json(&o)["summary"]["fail"].as_u64().unwrap() > 0);
}

#[test]
fn report_is_independent_of_worker_count() {
    let base = ["verify", "--suite", "grassmann", "--n", "2", "--seed", "4"];
    let one = edlab(&[&base[..], &["--jobs", "1"]].concat());
    let three = edlab(&[&base[..], &["--jobs", "3"]].concat());
    let from_env = Command::new(env!("CARGO_BIN_EXE_edlab")).args(base).env("EDLAB_JOBS", "2").output().unwrap();
    assert_eq!(code(&one), 0);
    let (a, b, c) = (json(&one), json(&three), json(&from_env));
    assert_eq!(checks(&a), checks(&b));
    assert_eq!(checks(&a), checks(&c));
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn out_writes_json_and_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = edlab(&["verify", "--suite", "algebra", "--n", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("edlab "));
    assert!(table.contains(" failed, "));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["config"]["n"], 3);
}

#[test]
fn classify_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_matrix(dir.path(), "zero.json", 2, zeros(4), zeros(4));
    let o = edlab(&["classify", "--matrix", &zero]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["verdict"], "integrable_to_second_order");
    assert_eq!(v["matrix_file"], zero.as_str());
    assert_eq!(v["in_hyperquadric"], true);

    // i·diag(1, 1, −1, −1) lies in the hyperquadric.
    let mut im = zeros(4);
    for (k, d) in [1.0, 1.0, -1.0, -1.0].into_iter().enumerate() {
        im[k][k] = d;
    }
    let member = write_matrix(dir.path(), "member.json", 2, zeros(4), im);
    assert_eq!(json(&edlab(&["classify", "--matrix", &member]))["verdict"], "integrable_to_second_order");

    // i·diag(1, 2, 0, −3) does not.
    let mut im = zeros(4);
    for (k, d) in [1.0, 2.0, 0.0, -3.0].into_iter().enumerate() {
        im[k][k] = d;
    }
    let generic = write_matrix(dir.path(), "generic.json", 2, zeros(4), im);
    let o = edlab(&["classify", "--matrix", &generic, "--seed", "7"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "obstructed");
}

#[test]
fn classify_rejects_bad_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(code(&edlab(&["classify", "--matrix", garbage.to_str().unwrap()])), 2);
    let mut re = zeros(4);
    re[0][1] = 1.0;
    re[1][0] = 1.0;
    let hermitian = write_matrix(dir.path(), "hermitian.json", 2, re, zeros(4));
    assert_eq!(code(&edlab(&["classify", "--matrix", &hermitian])), 2);
}

#[test]
fn constants_rows() {
    let o = edlab(&["constants", "--n", "2-3"]);
    assert_eq!(code(&o), 0);
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["n"], 2);
    assert!((rows[0]["c1"].as_f64().unwrap() + 4.0).abs() < 1e-12);
    assert_eq!(rows[0]["closed_coefficient_over_e4"], "6E²ν");
    assert!((rows[1]["c1"].as_f64().unwrap() + 48.0).abs() < 1e-12);
    assert!((rows[1]["closed_coefficient_over_e4"].as_f64().unwrap() - 5120.0 / 81.0).abs() < 1e-9);
    // The table goes to stderr when stdout carries JSON.
    assert!(String::from_utf8(o.stderr).unwrap().contains("c1"));
}
