use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bvkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvkit"))
        .args(args)
        .env("BVKIT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn master_equation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("me.json");
    let o = bvkit(&["check", "master-equation", "--m", "3", "--lie", "so3", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["seed"], 7);
    let ids = r["identities"].as_array().unwrap();
    assert!(!ids.is_empty() && ids.iter().all(|i| i["status"] == "pass"));
    let names: Vec<&str> = ids.iter().map(|i| i["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(ids.iter().all(|i| i["reference"].as_str().is_some_and(|s| !s.is_empty())));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Value> = ["a.json", "b.json"]
        .iter()
        .map(|f| {
            let out = dir.path().join(f);
            let o = bvkit(&["check", "brst", "--m", "4", "--lie", "gl2", "--seed", "3", "--cases", "2", "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
            strip_timing(report(&out))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn sign_rules_match_table() {
    let o = bvkit(&["check", "sign-rules", "--m", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("sign-rules/m=4/i=4") && text.contains("5/5"), "{text}");
}

#[test]
fn bad_algebra_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    // fails antisymmetry
    std::fs::write(&path, r#"{"name": "bad", "dim": 1, "f": [[["1"]]]}"#).unwrap();
    let o = bvkit(&["check", "master-equation", "--lie", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&path, "not json").unwrap();
    let o = bvkit(&["check", "master-equation", "--lie", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = bvkit(&["check", "master-equation", "--lie", "/nonexistent/alg.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bvkit(&["check", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(bvkit(&["check", "master-equation", "--lambda", "x"]).status.code(), Some(2));
    assert_eq!(bvkit(&["check", "master-equation", "--m", "4", "--kappa", "1"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_bvkit"))
        .args(["check", "sign-rules"])
        .env("BVKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn angular_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let emit = dir.path().join("coeffs.json");
    let o = bvkit(&["angular", "--n", "4", "--emit", emit.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let c = report(&emit);
    assert_eq!(c["n"], 4);
    assert_eq!(c["s"], 1);
    assert_eq!(c["C_k"][0], "(-1/2 + 0 i) pi^-2");
    assert_eq!(c["C_k"][1], "(1/4 + 0 i) pi^-2");
    assert_eq!(c["recursion_residuals"][0], "0");
    assert_eq!(c["dtheta_status"], "euler");
    assert_eq!(c["pfaffian_match"], true);
    let o = bvkit(&["angular", "--n", "3", "--emit", emit.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&emit)["dtheta_status"], "closed");
}

#[test]
fn angular_out_of_range() {
    let o = bvkit(&["angular", "--n", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("range"));
    assert_eq!(bvkit(&["angular", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn abelian_winding_loop() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("loop.json");
    std::fs::write(&lp, r#"{"mode": "exact", "winding": [2], "offset": [1]}"#).unwrap();
    let out = dir.path().join("h.json");
    let o = bvkit(&[
        "holonomy", "--loop", lp.to_str().unwrap(), "--conn", "abelian", "--conn-params", r#"{"c": "3/5"}"#,
        "--order", "6", "--mode", "exact", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    let names: Vec<&str> = r["identities"].as_array().unwrap().iter().map(|i| i["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"holonomy/abelian/order=6"));
    assert!(names.contains(&"holonomy/zero-connection"));
    assert!(names.contains(&"holonomy/composition/split=2q/order=6"));
}

#[test]
fn numeric_variation_and_zero_connection() {
    let o = bvkit(&["holonomy", "--loop", "trefoil", "--conn", "random", "--lie", "gl2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = bvkit(&["holonomy", "--loop", "trefoil", "--conn", "zero"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn malformed_loop_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("loop.json");
    for text in [r#"{"mode": "spiral"}"#, r#"{"mode": "exact", "winding": [0, 0]}"#, r#"{"mode": "numeric", "samples": [[0.0]]}"#] {
        std::fs::write(&lp, text).unwrap();
        assert_eq!(bvkit(&["holonomy", "--loop", lp.to_str().unwrap()]).status.code(), Some(2), "{text}");
    }
    assert_eq!(bvkit(&["holonomy", "--loop", "trefoil", "--mode", "exact"]).status.code(), Some(2));
}

#[test]
fn failing_identity_exits_1() {
    // a tolerance no numeric residual can meet
    let o = bvkit(&["holonomy", "--loop", "trefoil", "--conn", "random", "--lie", "gl2", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
