//! End-to-end runs of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqhorizon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn validate_accepts_shipped_specs() {
    for name in ["shear.json", "cosine_shear.json", "harmonic.json", "jrotation.json"] {
        let out = run(&["validate", spec(name).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn solve_reports_minimum_for_example() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("solve.json");
    let csv = dir.path().join("pair.csv");
    let out = run(&[
        "solve",
        spec("shear.json").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
        "--trajectory-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["applicable"], Value::Bool(true));
    assert_eq!(r["admissible"], Value::Bool(true));
    assert!((r["min_value"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    let header = std::fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,x_1,x_2,y_1,y_2,u_1");
}

#[test]
fn solve_flags_inadmissible_state_with_success_code() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("solve.json");
    let out = run(&[
        "solve",
        spec("shear.json").to_str().unwrap(),
        "--x0",
        "0,1",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r = read_json(&report);
    assert_eq!(r["admissible"], Value::Bool(false));
    assert!(r["min_value"].is_null());
}

#[test]
fn solve_without_dichotomy_exits_two() {
    let out = run(&["solve", spec("harmonic.json").to_str().unwrap(), "--x0", "1"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_weight_is_named_and_exits_one() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(spec("shear.json"))
        .unwrap()
        .replace("[[2.0, 1.0], [1.0, 1.0]]", "[[2.0, 1.0], [0.0, 1.0]]");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text).unwrap();
    let out = run(&["solve", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains('G'), "{stderr}");
}

#[test]
fn malformed_spec_reports_field_path() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dims": {"n": 2}, "colour": 1}"#).unwrap();
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for p in &paths {
        let out = run(&["solve", spec("cosine_shear.json").to_str().unwrap(), "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn periodic_example_stable_plane() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("d.json");
    let out = run(&["dichotomy", spec("cosine_shear.json").to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let r = read_json(&report);
    assert_eq!(r["has_dichotomy"], Value::Bool(true));
    let l = matrix(&r["l_plus"]);
    let expected = [[1.0, 0.0], [0.0, 0.0], [-1.0, 0.0], [0.0, 1.0]];
    // compare spans through the orthogonal projector onto each
    let proj = |rows: &[[f64; 2]]| {
        let a = nalgebra::DMatrix::from_fn(4, 2, |i, j| rows[i][j]);
        let q = a.clone().qr().q();
        &q * q.transpose()
    };
    let got: Vec<[f64; 2]> = l.iter().map(|r| [r[0], r[1]]).collect();
    assert!((proj(&got) - proj(&expected)).norm() < 1e-6);
}

#[test]
fn harmonic_oscillator_has_no_dichotomy() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("d.json");
    let out = run(&["dichotomy", spec("harmonic.json").to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_json(&report)["has_dichotomy"], Value::Bool(false));
}

#[test]
fn short_rotation_horizon_warns() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("rot.json");
    let out = run(&[
        "rotation",
        spec("shear.json").to_str().unwrap(),
        "--horizon",
        "1",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(read_json(&report)["warning"].is_string());
    assert!(String::from_utf8_lossy(&out.stdout).contains("warning"));
}

#[test]
fn rotation_of_j_is_minus_one() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("rot.json");
    let out = run(&["rotation", spec("jrotation.json").to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let alpha = read_json(&report)["alpha"].as_f64().unwrap();
    assert!((alpha + 1.0).abs() < 1e-3, "{alpha}");
}
