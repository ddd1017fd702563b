use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn geokin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geokin")).args(args).output().unwrap()
}

fn scenario(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_trajectory() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        dir.path(),
        r#"{"chart": {"kind": "contact", "n": 1}, "hamiltonian": "z", "task": "simulate",
            "initial": {"point": [0, 1, 1]}, "time": {"t_final": 1, "dt": 0.001},
            "output": {"dir": "out"}}"#,
    );
    let o = geokin(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "s,q1,p1,z,H,pred_dHds,div");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[2] - (-1.0f64).exp()).abs() < 1e-9, "{last:?}");
}

#[test]
fn identity_report_passes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("id.json");
    let o = geokin(&["identity", "--chart", "cocontact", "--n", "2", "--seed", "3", "--samples", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["laws"].as_array().unwrap().iter().all(|l| l["status"] == "PASS"));
}

#[test]
fn task_override_and_kinetic_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        dir.path(),
        r#"{"chart": {"kind": "symplectic", "n": 1}, "hamiltonian": "p1^2/2", "task": "kinetic-particle",
            "initial": {"grid": [{"lo": -4, "hi": 4, "size": 32}, {"lo": -4, "hi": 4, "size": 32}],
                        "density": {"gaussian": {"center": [0, 0], "sigma": [0.7, 0.7]}}},
            "time": {"t_final": 0.2, "dt": 0.01, "snapshots": [0.1, 0.2]}, "particles": 5000}"#,
    );
    let o = geokin(&["run", &cfg, "--task", "kinetic-grid"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("density_000.txt").exists());
    assert!(dir.path().join("density_001.txt").exists());
    assert!(dir.path().join("kinetic.json").exists());
    assert!(!dir.path().join("particles.csv").exists());

    let o = geokin(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("particles.csv").exists());
}

#[test]
fn momentum_check_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        dir.path(),
        r#"{"chart": {"kind": "contact", "n": 2}, "task": "momentum-check", "samples": 5, "seed": 9}"#,
    );
    let o = geokin(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("momentum.json").exists());
}

#[test]
fn validate_and_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(dir.path(), r#"{"chart": {"kind": "cosymplectic", "n": 1}, "hamiltonian": "t*q1 + p1^2/2", "task": "identity-check"}"#);
    let o = geokin(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("ok\n"));

    let bad = scenario(dir.path(), r#"{"chart": {"kind": "symplectic", "n": 1}, "hamiltonian": "z", "task": "identity-check"}"#);
    let o = geokin(&["validate", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    assert_eq!(geokin(&["run", "/nonexistent/scenario.json"]).status.code(), Some(2));
}
