use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn system(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(name)
}

fn tnf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnf")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn epsilon() -> String {
    system("epsilon.json").to_string_lossy().into_owned()
}

#[test]
fn normalize_epsilon_example() {
    let v = json(&tnf(&["normalize", &epsilon(), "--order", "2", "--format", "json"]));
    assert_eq!(v["nf"], Value::Array(vec![]));
    let lead = &v["phi"][0];
    assert_eq!(lead["component"], 2);
    assert_eq!(lead["P"], serde_json::json!([1]));
    assert_eq!(lead["Q"], serde_json::json!([2]));
    assert_eq!(lead["coeff"], serde_json::json!(["-1/20", "-1/20"]));
    assert_eq!(v["residuals"], serde_json::json!([0.0, 0.0]));
    assert_eq!(v["phi_nonresonant"], true);
}

#[test]
fn float_backend_agrees_with_exact() {
    let v = json(&tnf(&["normalize", &epsilon(), "--order", "2", "--backend", "float", "--format", "json"]));
    let c = &v["phi"][0]["coeff"];
    assert!((c[0].as_f64().unwrap() + 0.05).abs() < 1e-15);
    assert!((c[1].as_f64().unwrap() + 0.05).abs() < 1e-15);
}

#[test]
fn resonance_classes_of_the_unit_box() {
    let v = json(&tnf(&["resonances", &epsilon(), "--maxP", "1", "--maxQ", "1", "--format", "json"]));
    assert_eq!(v["class_count"], 6);
    let resonant: Vec<_> = v["classes"].as_array().unwrap().iter().filter(|c| c["resonant"] == true).collect();
    assert_eq!(resonant.len(), 1);
}

#[test]
fn brjuno_sum_of_cubic_doubling_schedule() {
    let v = json(&tnf(&["brjuno", "--gform", "2*m^3", "--mk", "doubling", "--format", "json"]));
    let b = v["brjuno_sum"]["value"].as_f64().unwrap();
    assert!((b - 7.0 * 2f64.ln()).abs() < 1e-9);
}

#[test]
fn json_output_is_deterministic() {
    let args = ["normalize", &epsilon(), "--format", "json"];
    assert_eq!(tnf(&args).stdout, tnf(&args).stdout);
}

#[test]
fn verify_accepts_own_report_and_rejects_tampered_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = tnf(&["normalize", &epsilon(), "--format", "json"]);
    let report = dir.path().join("report.json");
    std::fs::write(&report, &out.stdout).unwrap();
    let ok = tnf(&["verify", &epsilon(), "--against", report.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));

    let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["phi"][0]["coeff"] = serde_json::json!(["-1/21", "-1/20"]);
    std::fs::write(&report, serde_json::to_vec(&v).unwrap()).unwrap();
    let bad = tnf(&["verify", &epsilon(), "--against", report.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn malformed_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"d": 1, "n": 1, "omega": ["1"], "lambda": [["x", 0]], "cap": 2}"#).unwrap();
    let out = tnf(&["normalize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda[0]"), "{err}");

    let missing = tnf(&["normalize", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(tnf(&["brjuno", "--mk", "doubling"]).status.code(), Some(2));
}

#[test]
fn strict_bound_violation_exits_with_4() {
    let args = ["iterate", &epsilon(), "--mk", "doubling", "--gform", "2*m^3", "--steps", "2"];
    assert_eq!(tnf(&args).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(tnf(&strict).status.code(), Some(4));
}

#[test]
fn resonant_system_keeps_its_resonant_terms() {
    let path = system("resonant.json");
    let v = json(&tnf(&["normalize", path.to_str().unwrap(), "--format", "json"]));
    assert!(!v["nf"].as_array().unwrap().is_empty());
    assert!(v["residuals"].as_array().unwrap().iter().all(|r| r.as_f64() == Some(0.0)));
}
