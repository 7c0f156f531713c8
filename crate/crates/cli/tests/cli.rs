use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tauforge")).args(args).output().expect("spawn")
}

fn json(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v =
        serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), v)
}

#[test]
fn orbits_e7() {
    let (code, v) = json(&["orbits"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["report"]["sizes"], serde_json::json!([56, 126, 576, 756, 2016, 4032, 10080]));
    assert_eq!(v["report"]["rho_sq_over_nu_sq"], "798");
}

#[test]
fn spectrum_first_flag() {
    let (code, v) = json(&["spectrum", "--n", "1", "--nu", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["at"][0]["multiset"], serde_json::json!(["-3/2", "0"]));
}

#[test]
fn a2_invariants_are_conjugate() {
    let (code, v) = json(&["tau-eval", "--system", "a2", "--y", "0.3,0.1,-0.4"]);
    assert_eq!(code, 0);
    let re = &v["report"]["tau_re"];
    let im = &v["report"]["tau_im"];
    assert_eq!(re[0], re[1]);
    let a: f64 = im[0].as_str().unwrap().parse().unwrap();
    let b: f64 = im[1].as_str().unwrap().parse().unwrap();
    assert!((a + b).abs() < 1e-14 && a.abs() > 1e-6);
}

#[test]
fn printed_tables_fail_and_corrected_pass() {
    let (code, v) = json(&["verify-tables", "--samples", "10"]);
    assert_eq!(code, 1);
    assert_eq!(v["pass"], false);
    let failing: Vec<&str> = v["report"]["failing"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(failing, ["A17", "B1", "B2", "B3", "B4", "B5", "B6", "B7"]);
    let (code, v) = json(&["verify-tables", "--samples", "10", "--operator", "corrected"]);
    assert_eq!(code, 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn reports_are_deterministic() {
    let args = ["flatness", "--operator", "corrected", "--points", "2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["orbits", "--system", "b9"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["verify-tables", "--operator", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn text_format() {
    let out = run(&["orbits", "--system", "g2", "--format", "text"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("sizes: [6, 6]"), "{s}");
    assert!(s.contains("pass: true"));
}

#[test]
fn derived_operator_round_trips_through_file() {
    let dir = std::env::temp_dir().join(format!("tauforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a1.json");
    let (code, v) = json(&["derive", "--system", "a1", "--samples", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["operator"]["provenance"], "derived");
    let (code, v) = json(&["verify-tables", "--operator", path.to_str().unwrap(), "--samples", "10"]);
    assert_eq!(code, 0, "{v}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exported_matrix_is_triangular() {
    let out = run(&["export", "matrix", "--n", "1", "--matrix-format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "row\\col,1,t1\n1,0,0\nt1,0,-3/2\n");
}
