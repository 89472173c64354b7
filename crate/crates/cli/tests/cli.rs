use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_RUN: &str = r#"
[grid]
r_max = 40.0
cells = 400

[integration]
dt = 0.1
t_final = 2.0

[run]
particles = 2000
seed = 7
output_every = 5
"#;

fn rvp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvp"))
        .args(args)
        .current_dir(dir)
        .env("RVP_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_algebra_writes_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvp(&["verify-algebra", "-o", "."], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = json(&dir.path().join("certificate.json"));
    assert_eq!(cert["schema_version"], 1);
    assert_eq!(cert["all_proved"], true);
    assert!(cert["entries"].as_array().unwrap().len() > 100);
    assert!(dir.path().join("certificate.txt").exists());
}

#[test]
fn missing_output_directory_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvp(&["verify-algebra", "-o", "does/not/exist"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does/not/exist"));
}

#[test]
fn invalid_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\ncells = 10\n\n[integration]\ndt = -0.5\n");
    let out = rvp(&["simulate", "-c", &cfg, "-o", "."], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("dt"), "{err}");
}

#[test]
fn malformed_toml_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid\ncells = 10\n");
    let out = rvp(&["simulate", "-c", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rvp"))
        .args(["verify-algebra"])
        .current_dir(dir.path())
        .env("RVP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_RUN);
    let mut files = Vec::new();
    for name in ["a", "b"] {
        fs::create_dir(dir.path().join(name)).unwrap();
        let out = rvp(&["simulate", "-c", &cfg, "-o", name], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(
            ["simulate.csv", "field.csv", "simulate.json"].map(|f| fs::read(dir.path().join(name).join(f)).unwrap()),
        );
    }
    assert_eq!(files[0], files[1]);
    let summary = json(&dir.path().join("a/simulate.json"));
    assert_eq!(summary["schema_version"], 1);
    assert!(summary["summary"]["charge_drift"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn collapsing_speeds_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "[initial_data]\nepsilon = 20000.0\n\n{}",
        SMALL_RUN.replace("t_final = 2.0", "t_final = 10.0\nsigma = -1")
    );
    let cfg = write_config(dir.path(), &body);
    let out = rvp(&["simulate", "-c", &cfg, "-o", "."], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("barrier"));
}

#[test]
fn inequality_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[inequality]\nlevel = 4\ngate_points = 8\np = [0, 2]\ntimes = [1.0, 2.0]\n",
    );
    let out = rvp(
        &[
            "inequality",
            "-c",
            &cfg,
            "-o",
            ".",
            "--p",
            "0",
            "--times",
            "5",
            "--family",
            "free-narrow",
        ],
        dir.path(),
    );
    assert!(
        matches!(out.status.code(), Some(0 | 1)),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&dir.path().join("inequality.json"));
    assert_eq!(report["p"], serde_json::json!([0]));
    assert_eq!(report["times"], serde_json::json!([5.0]));
    let members = report["members"].as_array().unwrap();
    assert_eq!(members.len(), 1);
    assert_eq!(members[0]["name"], "free-narrow");
    assert_eq!(members[0]["max_transport_sum"], 0.0);
    let csv = fs::read_to_string(dir.path().join("inequality.csv")).unwrap();
    assert!(csv.starts_with("member,t,p,sup_r,lhs,rhs,transport_sum,ratio,rhs_error,converged\n"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn unknown_family_member_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvp(&["inequality", "-o", ".", "--family", "nobody"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_summarizes_existing_results() {
    let dir = tempfile::tempdir().unwrap();
    let empty = rvp(&["report", "-o", "."], dir.path());
    assert_eq!(empty.status.code(), Some(2));
    assert_eq!(rvp(&["verify-algebra", "-o", "."], dir.path()).status.code(), Some(0));
    let out = rvp(&["report", "-o", "."], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert!(!String::from_utf8_lossy(&out.stdout).is_empty());
}
