use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn asmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asmlab"))
        .args(args)
        .env_remove("ASMLAB_TOLERANCE_PROFILE")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_spin(dir: &TempDir, name: &str, bloch: &str) -> PathBuf {
    let path = dir.path().join(name);
    let out = asmlab(&["spin", "build", bloch, "--out", s(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn validate_sharp_pvm_is_projective() {
    let dir = TempDir::new().unwrap();
    let file = build_spin(&dir, "sharp.json", "0,0,1");
    let out = asmlab(&["validate", s(&file)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["projective"], true);
    assert_eq!(v["support"]["spectrum"], serde_json::json!(["+", "-"]));
}

#[test]
fn validate_unsharp_povm_reports_residual() {
    let dir = TempDir::new().unwrap();
    let file = build_spin(&dir, "rk.json", "0,0,0.5");
    let out = asmlab(&["validate", s(&file)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["projective"], false);
    assert!((v["projectivity_residual"].as_f64().unwrap() - 0.1875).abs() < 1e-12);
}

#[test]
fn validate_rejects_negative_effect() {
    let dir = TempDir::new().unwrap();
    let file = write(
        &dir,
        "neg.json",
        r#"{"dim": 1, "outcomes": [
            {"label": "a", "operator": [[[-0.5, 0.0]]]},
            {"label": "b", "operator": [[[1.5, 0.0]]]}]}"#,
    );
    let out = asmlab(&["validate", s(&file)]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["valid"], false);
    assert_eq!(v["normalized"], true);
}

#[test]
fn validate_reports_unnormalized_measure() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "half.json", r#"{"dim": 1, "outcomes": [{"label": "a", "operator": [[[0.5, 0.0]]]}]}"#);
    let out = asmlab(&["validate", s(&file)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["normalized"], false);
}

#[test]
fn malformed_json_exits_two_with_line_number() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "bad.json", "{\n  \"dim\": 2,\n  \"outcomes\": [\n");
    let out = asmlab(&["validate", s(&file)]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:4:"), "{err}");
}

#[test]
fn unknown_field_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "extra.json", r#"{"dim": 1, "outcomes": [], "colour": 3}"#);
    assert_eq!(code(&asmlab(&["validate", s(&file)])), 2);
}

#[test]
fn roy_kar_sweep_passes_and_writes_csv() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "rk.json", r#"{"type":"roy_kar","n":[0,0,1]}"#);
    let csv = dir.path().join("sweep.csv");
    let out = asmlab(&["sweep", s(&family), "--out", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["rule"]["tail"], 5);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("hbar,set_pair,defect,norm_AX"));
    // power set of two points: 4 sets, 10 unordered pairs, 40 net points
    assert_eq!(lines.count(), 40 * 10);
    let row: Vec<&str> = text.lines().nth(1 + 3).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[3], "1");
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "grid.json", r#"{"type":"grid_gaussian","a":0,"b":1,"n":6}"#);
    let csv = dir.path().join("sweep.csv");
    let run = || {
        let out = asmlab(&["sweep", s(&family), "--mode", "morphism", "--seed", "3", "--out", s(&csv)]);
        (out.stdout, std::fs::read(&csv).unwrap())
    };
    let first = run();
    assert_eq!(first, run());
}

#[test]
fn constant_unsharp_family_fails() {
    let dir = TempDir::new().unwrap();
    let povm = build_spin(&dir, "unsharp.json", "0,0.6,0");
    let text = std::fs::read_to_string(povm).unwrap();
    let family = write(&dir, "fam.json", &format!(r#"{{"type":"constant","povm":{text}}}"#));
    let out = asmlab(&["sweep", s(&family)]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["verdict"], "FAIL");
}

#[test]
fn constant_pvm_family_requires_projective_povm() {
    let dir = TempDir::new().unwrap();
    let povm = build_spin(&dir, "unsharp.json", "0,0.6,0");
    let text = std::fs::read_to_string(povm).unwrap();
    let family = write(&dir, "fam.json", &format!(r#"{{"type":"constant_pvm","povm":{text}}}"#));
    assert_eq!(code(&asmlab(&["sweep", s(&family)])), 2);
}

#[test]
fn invalid_net_exits_two() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "rk.json", r#"{"type":"roy_kar","n":[0,0,1]}"#);
    assert_eq!(code(&asmlab(&["sweep", s(&family), "--net-ratio", "1.0"])), 2);
    assert_eq!(code(&asmlab(&["sweep", s(&family), "--net-count", "0"])), 2);
    assert_eq!(code(&asmlab(&["sweep", s(&family), "--rule-tail", "0"])), 2);
}

#[test]
fn morphism_mode_on_roy_kar_passes() {
    let dir = TempDir::new().unwrap();
    let family = write(&dir, "rk.json", r#"{"type":"roy_kar","n":[1,0,0]}"#);
    let out = asmlab(&["sweep", s(&family), "--mode", "morphism"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["mode"], "morphism");
    assert_eq!(v["positive"], true);
}

#[test]
fn spin_classify_recovers_sharpness() {
    let dir = TempDir::new().unwrap();
    let file = build_spin(&dir, "rk.json", "0,0,0.5");
    let out = asmlab(&["spin", "classify", s(&file)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let x: Vec<f64> = v["bloch"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
    assert!((x[0]).abs() < 1e-12 && (x[1]).abs() < 1e-12 && (x[2] - 0.5).abs() < 1e-12);
    assert!((v["reality"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((v["unsharpness"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn spin_classify_rejects_three_outcomes() {
    let dir = TempDir::new().unwrap();
    let file = write(
        &dir,
        "three.json",
        r#"{"dim": 1, "outcomes": [
            {"label": "a", "operator": [[[0.2, 0.0]]]},
            {"label": "b", "operator": [[[0.3, 0.0]]]},
            {"label": "c", "operator": [[[0.5, 0.0]]]}]}"#,
    );
    assert_eq!(code(&asmlab(&["spin", "classify", s(&file)])), 1);
}

#[test]
fn spin_build_outside_ball_exits_one() {
    assert_eq!(code(&asmlab(&["spin", "build", "0,0,1.5"])), 1);
    assert_eq!(code(&asmlab(&["spin", "build", "0,1"])), 2);
}

#[test]
fn spin_build_accepts_negative_components() {
    let out = asmlab(&["spin", "build", "-1,0,0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["dim"], 2);
}

#[test]
fn bell_limits() {
    let v = stdout_json(&asmlab(&["bell", "--hbar", "1e-6"]));
    assert!((v["chsh"].as_f64().unwrap() - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-5);
    assert!((v["threshold"].as_f64().unwrap() - 0.089_820_278_875_545_32).abs() < 1e-12);

    let v = stdout_json(&asmlab(&["bell", "--hbar", "1"]));
    assert!(v["chsh"].as_f64().unwrap().abs() < 1e-12);

    let out = asmlab(&["bell", "--hbar", "0.5", "--n", "-1,0,0"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn bell_rejects_bad_flags() {
    assert_eq!(code(&asmlab(&["bell", "--hbar", "0"])), 2);
    assert_eq!(code(&asmlab(&["bell", "--hbar", "1.5"])), 2);
    assert_eq!(code(&asmlab(&["bell"])), 2);
    assert_eq!(code(&asmlab(&["bell", "--hbar", "0.5", "--n", "0,0,0"])), 2);
}

#[test]
fn dilate_reproduces_effects() {
    let dir = TempDir::new().unwrap();
    let file = build_spin(&dir, "rk.json", "0.3,0,0.4");
    let out = asmlab(&["dilate", s(&file)]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["dilated_dim"], 4);
    assert_eq!(v["projective"], true);
    assert!(v["isometry_residual"].as_f64().unwrap() < 1e-9);
    assert!(v["max_compression_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn quantize_coordinate_is_spin_observable() {
    let dir = TempDir::new().unwrap();
    let file = build_spin(&dir, "sharp.json", "0,0,1");
    let out = asmlab(&["quantize", s(&file), "--function", r#"{"type":"coordinate"}"#]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["operator"][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["operator"][1][1][0].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!(v["norm_bound_margin"].as_f64().unwrap() >= 0.0);

    let fun = write(&dir, "f.json", r#"{"type":"indicator","set":["+"]}"#);
    let out = asmlab(&["quantize", s(&file), "--function", &format!("@{}", s(&fun))]);
    assert_eq!(code(&out), 0);
    assert!(stdout_json(&out)["min_eigenvalue"].as_f64().unwrap().abs() < 1e-12);

    let out = asmlab(&["quantize", s(&file), "--function", r#"{"type":"indicator","set":["?"]}"#]);
    assert_eq!(code(&out), 2);
}

#[test]
fn strict_profile_and_overrides() {
    let dir = TempDir::new().unwrap();
    let file = build_spin(&dir, "sharp.json", "0,0,1");
    let out = Command::new(env!("CARGO_BIN_EXE_asmlab"))
        .args(["validate", s(&file)])
        .env("ASMLAB_TOLERANCE_PROFILE", "strict")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_asmlab"))
        .args(["validate", s(&file)])
        .env("ASMLAB_TOLERANCE_PROFILE", "lenient")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert_eq!(code(&asmlab(&["validate", s(&file), "--tol-psd", "-1"])), 2);
    assert_eq!(code(&asmlab(&["--tol-projectivity", "1e-6", "validate", s(&file)])), 0);
}
