use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hilbundle"));
    cmd.env_remove("HB_OUT_DIR");
    cmd
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn run_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("pure_gauge.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("pure_gauge.csv")).unwrap();
    assert_eq!(csv.lines().count(), 502);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pure_gauge.report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "pure_gauge");
    assert!(report["wall_ms"].is_null());
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, report);
}

#[test]
fn steps_override_changes_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("pure_gauge.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--steps", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("pure_gauge.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("metric_k4.json");
    let out = bin()
        .args(["run", cfg.to_str().unwrap()])
        .env("HB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("metric_k4.csv")).unwrap();
    assert!(csv.starts_with("t,re(c_1),im(c_1),re(c_2),im(c_2),norm,eta_min_eig,eta_max_eig\n"));
}

#[test]
fn corrupted_metric_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("metric_corrupt.json");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let residual = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "metric_residual")
        .unwrap();
    assert_eq!(residual["pass"], false);
}

#[test]
fn parse_error_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"kind\": ]\n}").unwrap();
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "ParseError");
    assert_eq!(err["line"], 3);
}

#[test]
fn validation_error_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("invalid.json");
    std::fs::write(&path, "{}").unwrap();
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "ValidationError");
    assert!(err["field"].as_str().unwrap().contains("initial_state"));
}

#[test]
fn unknown_suite_is_usage_error() {
    let cfg = scenario("spin_half.json");
    let out = run(&["check", cfg.to_str().unwrap(), "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "UsageError");
    assert!(err["message"].as_str().unwrap().contains("geometry"));
}

#[test]
fn bad_arguments_are_usage_errors() {
    for args in [vec!["frobnicate"], vec!["run"], vec!["check", "x.json"]] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&out)["error"], "UsageError");
    }
}

#[test]
fn missing_config_file_is_usage_error() {
    let out = run(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn geometry_suite_on_pure_gauge() {
    let cfg = scenario("pure_gauge.json");
    let out = run(&["check", cfg.to_str().unwrap(), "--suite", "geometry"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"flatness") && names.contains(&"gauge_covariance"));
}

#[test]
fn curvature_of_constant_field() {
    let cfg = scenario("square_holonomy.json");
    let out = run(&["curvature", cfg.to_str().unwrap(), "--at", "-0.4,2.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let m = &v["components"][0]["matrix"];
    // F_01 = −2σ_z for A = (σ_x, σ_y)
    assert!((m[0][0][0].as_f64().unwrap() + 2.0).abs() < 1e-9);
    assert!((m[1][1][0].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let out = run(&["curvature", cfg.to_str().unwrap(), "--at", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn curvature_outside_chart_is_runtime_error() {
    let cfg = scenario("spin_half.json");
    let out = run(&["curvature", cfg.to_str().unwrap(), "--at", "0.0,4.0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "ChartDomainError");
}

#[test]
fn version_prints_schema() {
    let out = run(&["version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("schema 1"));
}
