use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ancilla-phase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn closed_form_curve_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = bin(&["fisher-curve", "--strategy", "closed-form", "--p", "0", "--grid", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("phi,fisher\n"));
    assert!(!text.contains('\r'));
    let data = rows(&out);
    assert_eq!(data.len(), 64);
    assert!(data.iter().all(|r| (r[1] - 4.0).abs() < 1e-9));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("curve.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fisher-curve");
    assert_eq!(manifest["convention_fingerprint"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["config"]["p"], "0.0");
}

#[test]
fn closed_form_has_blind_spots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = bin(&["fisher-curve", "--strategy", "closed-form", "--p", "0.005", "--grid", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let data = rows(&out);
    assert!(data[0][1].abs() <= 1e-9);
    assert!(data[32][1].abs() <= 1e-9);
}

#[test]
fn ancilla_curve_has_angle_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let o = bin(&[
        "fisher-curve", "--strategy", "ancilla-optimized", "--p", "0.05", "--grid", "8",
        "--set", "search=quick", "--set", "ancilla_cross_term=symmetric", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(fs::read_to_string(&out).unwrap().starts_with("phi,fisher,alpha1,alpha2,beta1,beta2\n"));
    let data = rows(&out);
    assert!(data.iter().all(|r| r.len() == 6 && r[1] > 2.0));
}

#[test]
fn thresholds() {
    let o = bin(&["threshold", "--strategy", "reference"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v["p_star"].as_f64().unwrap();
    assert!((0.1590..=0.1592).contains(&p), "{p}");
    assert_eq!(v["predicate"], "minF>2");

    let o = bin(&["threshold", "--strategy", "bare", "--grid", "32"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["p_star"].as_f64().unwrap(), 0.0);
    assert_eq!(v["phi_set"].as_array().unwrap().len(), 32);
}

#[test]
fn optimize_theta_reports_angles() {
    let o = bin(&["optimize-theta", "--phi", "0", "--p", "0.05", "--set", "search=quick"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["f_opt"].as_f64().unwrap() > 0.0);
    assert_eq!(v["search_trace"].as_array().unwrap().len(), 3);
}

#[test]
fn adaptive_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# small run\np = 0.02\ntrials = 4\ndetections = 60\nsearch = quick\nphis = 0.4, 1.9\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = bin(&["adaptive", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{o:?}");
    }
    for f in ["ensemble.csv", "trials.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let text = fs::read_to_string(a.join("ensemble.csv")).unwrap();
    assert!(text.starts_with("phi_true,mean,variance,sem,trials,detections\n"));
    assert_eq!(text.lines().count(), 3);

    // Replaying the manifest's configuration reproduces the data.
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    let replay: String = manifest["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    let replay_cfg = dir.path().join("replay.cfg");
    fs::write(&replay_cfg, replay).unwrap();
    let c = dir.path().join("c");
    let o = bin(&["adaptive", "--config", replay_cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(fs::read(a.join("ensemble.csv")).unwrap(), fs::read(c.join("ensemble.csv")).unwrap());
}

#[test]
fn single_trial_single_detection() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "adaptive", "--trials", "1", "--detections", "1", "--p", "0.01", "--set", "search=quick",
        "--set", "phis=1.0", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let data = rows(&dir.path().join("ensemble.csv"));
    assert_eq!(data.len(), 1);
    assert_eq!(data[0][2], 0.0);
    assert_eq!(data[0][3], 0.0);
    assert_eq!(data[0][4], 1.0);
    assert_eq!(data[0][5], 1.0);
}

#[test]
fn validate_passes_with_defaults_and_names_convention_failures() {
    let o = bin(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("convention fingerprint"));
    assert!(!stdout.contains("FAIL"));

    let o = bin(&["validate", "--set", "bs_transmissivity=0.4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("validate_convention"));
}

#[test]
fn error_exit_codes() {
    assert_eq!(bin(&["fisher-curve", "--strategy", "closed-form", "--p", "-0.1"]).status.code(), Some(2));
    assert_eq!(bin(&["adaptive", "--set", "bogus=1", "--out", "x"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    let o = bin(&[
        "fisher-curve", "--strategy", "closed-form", "--p", "0.1",
        "--out", "/nonexistent-dir/sub/curve.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
