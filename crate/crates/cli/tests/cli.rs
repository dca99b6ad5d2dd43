use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const J01_SQUARED: f64 = 5.783185962946785;

fn hgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgap")).args(args).output().expect("hgap runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn odi_check_at_the_optimum_saturates() {
    let out = hgap(&["odi-check", "--family", "clamped_constant", "--n", "3", "--kappa", "1", "--p", "2", "--optimal", "--no-timestamp"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let theorems: Vec<&str> = report["theorems"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    assert!(theorems.contains(&"T3.1") && theorems.contains(&"T1.1"));
    let min = report["rows"][0]["computed"].as_f64().unwrap();
    assert!(min.abs() < 1e-12, "{min}");
}

#[test]
fn raised_constant_exits_one() {
    let out = hgap(&["odi-check", "--family", "clamped_constant", "--n", "3", "--kappa", "1", "--p", "2", "--C", "1.001"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("FAIL T3.1"));
}

#[test]
fn clamped_sweep_csv_ends_within_two_percent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = hgap(&[
        "sharpness", "--kind", "clamped", "--n", "2", "--kappa", "1", "--p", "2", "--deltas", "8,32,128,500", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "theorem,delta,quotient,limit,rel_gap,pass,error");
    let last: Vec<&str> = lines.last().unwrap().split(',').collect();
    assert_eq!(last[0], "T1.1");
    let rel_gap: f64 = last[4].parse().unwrap();
    assert!((0.0..0.02).contains(&rel_gap), "{rel_gap}");
    // nothing but the report is left in the directory
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn membrane_disk_matches_bessel_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eigen.json");
    let dump = dir.path().join("modes.csv");
    let out = hgap(&[
        "eigen", "--kind", "membrane", "--n", "2", "--kappa", "0", "--R", "1", "--mesh", "256", "--out",
        path.to_str().unwrap(), "--dump", dump.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(&path);
    let lambda = report["parameters"]["eigenvalues"][0].as_f64().unwrap();
    assert!((lambda - J01_SQUARED).abs() / J01_SQUARED < 1e-6, "{lambda}");
    let modes = fs::read_to_string(&dump).unwrap();
    assert!(modes.starts_with("t,u1\n"));
    assert_eq!(modes.lines().count(), 257);
}

#[test]
fn unattainable_tolerance_exits_one() {
    let out = hgap(&["eigen", "--kind", "membrane", "--n", "2", "--mesh", "64", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gap_study_needs_curvature() {
    let out = hgap(&["eigen", "--kind", "clamped", "--n", "2", "--kappa", "0", "--R", "2,5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic_without_timestamps() {
    let args = ["rellich", "--mode", "hardy", "--samples", "4", "--no-timestamp"];
    let (a, b) = (hgap(&args), hgap(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let stamped = hgap(&["rellich", "--mode", "hardy", "--samples", "1"]);
    let report: serde_json::Value = serde_json::from_slice(&stamped.stdout).unwrap();
    assert!(report["generated_unix"].as_u64().is_some());
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# buckling sweep\ncommand = sharpness\nkind = buckling\nn = 5\ndeltas = 8, 16\nno-timestamp = true\n").unwrap();
    let out = hgap(&["sharpness", "--config", cfg.to_str().unwrap(), "--n", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["parameters"]["n"], 3);
    assert_eq!(report["parameters"]["kind"], "Buckling");
    assert_eq!(report["parameters"]["deltas"], serde_json::json!([8.0, 16.0]));
    assert!(report["generated_unix"].is_null());
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    for body in ["colour = red\n", "n = three\n", "just words\n", "command = eigen\n"] {
        fs::write(&cfg, body).unwrap();
        let out = hgap(&["sharpness", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}");
    }
    let missing = hgap(&["sharpness", "--config", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn hypothesis_violations_exit_two() {
    assert_eq!(hgap(&["rellich", "--mode", "gradient", "--n", "7"]).status.code(), Some(2));
    assert_eq!(hgap(&["odi-check", "--family", "rellich_bessel", "--n", "4"]).status.code(), Some(2));
    assert_eq!(hgap(&["sharpness", "--kind", "buckling", "--p", "3"]).status.code(), Some(2));
    assert_eq!(hgap(&["odi-check", "--optimal", "--a", "1"]).status.code(), Some(2));
    assert_eq!(hgap(&["sharpness", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn csv_fields_are_quoted() {
    let out = hgap(&["rellich", "--mode", "weighted", "--samples", "0", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("theorem,parameters,computed,reference,residual,pass\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("R5.2,\"Weighted"));
}

#[test]
fn validate_prints_one_line_per_criterion() {
    let out = hgap(&["validate", "--criteria", "2,10", "--no-timestamp"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("criterion 2 PASS"));
    assert!(err.contains("criterion 10 PASS"));
    assert_eq!(hgap(&["validate", "--criteria", "11"]).status.code(), Some(2));
}

#[test]
fn full_report_names_every_result() {
    let out = hgap(&["report", "--no-timestamp", "--mesh", "128"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = report["theorems"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    for id in ["T1.1", "T1.2", "T2.1", "T3.1", "T3.2", "T4.3", "T4.4", "T5.1", "R5.2", "T5.3", "T5.4", "T5.5", "T5.6", "H5.2"] {
        assert!(ids.contains(&id), "{id} missing from {ids:?}");
    }
}
