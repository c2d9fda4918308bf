use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_monodromy-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn monodromy-lab")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    v
}

fn matrix(v: &Value) -> Vec<Vec<i64>> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn bifdiag_slice_file_has_two_focus_focus_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slice.json");
    let out = run(&["bifdiag", "--k", "1.8", "--samples", "20", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let ffr = v["slices"][0]["rank1"].as_array().unwrap().iter().filter(|r| r["type"] == "FFR").count();
    assert_eq!(ffr, 2);
    assert!(!v["slices"][0]["rank2"].as_array().unwrap().is_empty());
}

#[test]
fn bifdiag_reports_fixed_point_values() {
    let v = json(&["bifdiag", "--k", "2.0", "--samples", "10"]);
    let rank0 = v["slices"][0]["rank0"].as_array().unwrap();
    assert!(rank0.iter().any(|p| p["h1"] == -2.5 && p["h2"] == 2.5));
}

#[test]
fn bifdiag_csv() {
    let out = run(&["bifdiag", "--k", "1.8", "--samples", "10", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("k,rank,piece,family,type,h1,h2\n"));
    assert_eq!(text.lines().filter(|l| l.contains(",FFR,")).count(), 2);
}

#[test]
fn bifdiag_rejects_empty_slices() {
    let out = run(&["bifdiag", "--k", "-5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn monodromy_gamma1_and_gamma3() {
    for (name, want) in [("gamma1", vec![vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]]), ("gamma3", vec![vec![1, 0, 0], vec![0, 2, 1], vec![0, -1, 0]])] {
        let v = json(&["monodromy", "--loop", name, "--report", "json"]);
        let r = &v["loops"][0]["report"];
        assert_eq!(matrix(&r["conjugated"]["entries"]), want, "{name}");
        assert!(r["matrix"]["raw"].is_array() && r["before"]["t2"].is_array() && r["after"]["t3"].is_array());
        assert_eq!(v["passed"], true);
    }
}

#[test]
fn contractible_custom_loop_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loop.json");
    std::fs::write(&path, "[[2,1,1.8],[2.05,1,1.8],[2.05,1.05,1.8],[2,1,1.8]]").unwrap();
    let v = json(&["monodromy", "--loop", "custom", "--waypoints", path.to_str().unwrap()]);
    let id = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    assert_eq!(matrix(&v["loops"][0]["report"]["matrix"]["entries"]), id);
}

#[test]
fn custom_loop_needs_waypoints() {
    assert_eq!(run(&["monodromy", "--loop", "custom"]).status.code(), Some(2));
}

#[test]
fn a2_loop3() {
    let v = json(&["a2", "--loop", "3"]);
    assert_eq!(matrix(&v["loops"][0]["matrix"]), vec![vec![2, 1], vec![-1, 0]]);
}

#[test]
fn a2_normal_form_audit_passes() {
    let v = json(&["a2", "--verify-normal-form"]);
    assert_eq!(v["normal_form"]["passed"], true);
    assert_eq!(v["loops"].as_array().unwrap().len(), 4);
}

#[test]
fn lax_check_triple_root() {
    let v = json(&["lax-check", "--trajectory-time", "2", "--samples", "801"]);
    let a0 = (4.0 * 2f64.powf(2.0 / 3.0) + 3.0) / 16.0;
    assert!((v["triple_root"]["a0"].as_f64().unwrap() - a0).abs() < 1e-12);
    assert_eq!(v["passed"], true);
}

#[test]
fn reduce_polygon_at_k_one() {
    let v = json(&["reduce", "--k", "1", "--delzant"]);
    assert_eq!(v["vertex_count"], 5);
    assert_eq!(v["delzant"], true);
}

#[test]
fn fiber_at_the_central_value() {
    let v = json(&["fiber"]);
    assert_eq!(v["local"]["kind"], "Central");
    let factors = v["spectral_factors"].as_array().unwrap();
    assert!(factors.iter().any(|f| f["degree"] == 2 && f["multiplicity"] == 3));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["flow", "--seed", "11", "--time", "3", "--samples", "5", "--coeffs", "1,1,1"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["flow", "--seed", "12", "--time", "3", "--samples", "5", "--coeffs", "1,1,1"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn params_override_and_validation() {
    let v = json(&["bifdiag", "--k", "0.5", "--samples", "10", "--params", "0.3,1.2,1,0.8"]);
    assert_eq!(v["params"]["g"], 0.8);
    assert_eq!(run(&["bifdiag", "--k", "0.5", "--params", "1,1,1"]).status.code(), Some(2));
}

#[test]
fn csv_is_limited_to_slice_and_trajectory_data() {
    assert_eq!(run(&["a2", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn thread_cap_from_environment() {
    let ok = bin().args(["a2", "--loop", "1"]).env("MONODROMY_LAB_THREADS", "1").output().unwrap();
    assert!(ok.status.success());
    let bad = bin().args(["a2", "--loop", "1"]).env("MONODROMY_LAB_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn failed_audit_sets_exit_status() {
    // A tolerance far below the rounding residual fails the audit but still writes the report.
    let out = run(&["a2", "--loop", "2", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
}
