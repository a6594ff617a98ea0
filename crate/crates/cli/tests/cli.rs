//! End-to-end behaviour of the `geoflow` binary: exit codes, artifacts, config precedence.

use std::path::Path;
use std::process::{Command, Output};

fn geoflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run geoflow")
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoflow")).args(args).output().expect("run geoflow")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn list_names_the_models() {
    let out = bare(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["heisenberg", "warped_control", "hopf_s3", "octonionic_hopf", "flat_split"] {
        assert!(text.contains(name), "{name}");
    }
    let out = bare(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().any(|d| d["name"] == "hopf_s3" && d["declared"]["principal_bundle"] == true));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = bare(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn heisenberg_geodesic_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoflow(&["geodesic", "--model", "heisenberg", "--hamiltonian", "h", "--p", "1,0,1", "--t", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("trajectory.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "x1", "x2", "x3", "p1", "p2", "p3", "chart_id", "H"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect()).collect();
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(rows.last().unwrap()[0], 1.0);
    let summary = json(&dir.path().join("geodesic.json"));
    assert!(summary["report"]["energy_drift"].as_f64().unwrap() <= 1e-8);
    assert_eq!(summary["config"]["p"], serde_json::json!([1.0, 0.0, 1.0]));
    assert!(summary["version"].is_string());
    assert!(dir.path().join("run_meta.json").exists());
}

#[test]
fn flat_riemannian_geodesic_is_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoflow(&["geodesic", "--model", "flat_split", "--x", "0,0,0", "--v", "1,-2,0.5", "--t", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let end = &json(&dir.path().join("geodesic.json"))["report"]["end"]["x"];
    let end: Vec<f64> = end.as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).collect();
    for (a, b) in end.iter().zip([2.0, -4.0, 1.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn out_of_atlas_start_names_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoflow(&["geodesic", "--model", "hopf_s3", "--x", "50,0,0", "--p", "1,0,0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("guard of chart 0"), "{err}");
}

#[test]
fn negative_control_passes_by_failing() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoflow(&["verify", "factorization", "--model", "warped_control", "--covectors", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("identity violated as declared"));
}

#[test]
fn gauge_on_octonionic_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoflow(&["verify", "gauge", "--model", "octonionic_hopf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a principal bundle"));
}

#[test]
fn tightened_tolerance_is_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    // no flow resolves the identity below zero
    let out = geoflow(&["verify", "commute", "--model", "hopf_s3", "--states", "5", "--covectors", "1", "--tol-identity", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn convergence_reports_plateau_and_validates_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoflow(&["convergence", "commute", "--model", "warped_control"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("non-vanishing limit"));
    let rep = json(&dir.path().join("convergence-commute-warped_control.json"));
    assert_eq!(rep["report"]["non_vanishing_limit"], true);
    assert!(dir.path().join("convergence-commute-warped_control.txt").exists());

    let out = geoflow(&["convergence", "factorization", "--model", "heisenberg", "--steps", "1e-3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3 steps"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "model = \"flat_split\"\nt = 0.5\nseed = 11\n[flow]\nstep = 0.01\n").unwrap();
    let out = geoflow(&["geodesic", "--config", cfg.to_str().unwrap(), "--t", "0.25"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c = &json(&dir.path().join("geodesic.json"))["config"];
    assert_eq!(c["model"], "flat_split");
    assert_eq!(c["t"], 0.25);
    assert_eq!(c["seed"], 11);
    assert_eq!(c["flow"]["step"], 0.01);
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_geoflow"))
        .args(["geodesic", "--model", "flat_split", "--t", "0.1"])
        .env("GEOFLOW_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("trajectory.csv").exists());
}
