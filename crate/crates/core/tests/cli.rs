//! End-to-end runs of the binary against temporary output directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use floquet_kdvbf::orbit::WaveProfile;
use floquet_kdvbf::spectrum::{csv_rows, floquet_sweep, read_csv};

const EPS: &str = "0.002,0.004";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet-kdvbf")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn orbit_then_spectrum(dir: &Path) {
    let d = dir.to_str().unwrap();
    let out = run(&["orbit", "--eps", EPS, "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["spectrum", "--eps", EPS, "--n-theta", "8", "--bloch-n", "16", "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn hopf_prints_critical_point() {
    let out = run(&["hopf", "--r", "4"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["c_star"].as_f64().unwrap() + 4.0).abs() < 1e-10);
    assert!((doc["omega_star"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((doc["slope"].as_f64().unwrap() + 0.1).abs() < 1e-8);
}

#[test]
fn bad_parameters_exit_one() {
    let out = run(&["hopf", "--r", "-1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("r must be positive"));
    assert_eq!(code(&run(&["orbit", "--eps", "0.004,0.002"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn missing_profiles_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--eps", "0.002", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing profile"));
}

#[test]
fn pipeline_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    orbit_then_spectrum(dir.path());
    for name in ["scalings.csv", "amplitude_vs_sqrt_eps.dat", "verdicts.json", "convergence.csv"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }

    let text = fs::read_to_string(dir.path().join("wave_eps0.004.json")).unwrap();
    let profile = WaveProfile::from_json(&text).unwrap();
    assert_eq!(profile.eps, 0.004);
    let dat = fs::read_to_string(dir.path().join("profile_eps0.004.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 513);

    let expected = csv_rows(&floquet_sweep(&profile, 8, 16).unwrap());
    let file = fs::File::open(dir.path().join("spectrum_eps0.004.csv")).unwrap();
    let read = read_csv(file).unwrap();
    assert_eq!(read, expected);

    let verdicts: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verdicts.json")).unwrap()).unwrap();
    let list = verdicts["verdicts"].as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert!(list.iter().all(|v| v["unstable"].as_bool() == Some(true)), "{verdicts}");
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    orbit_then_spectrum(a.path());
    orbit_then_spectrum(b.path());
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn constant_coefficient_spectrum_peaks_at_r() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["spectrum", "--constant-coeff", "--r", "2", "--n-theta", "8", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let file = fs::File::open(dir.path().join("spectrum_eps0.csv")).unwrap();
    let rows = read_csv(file).unwrap();
    let best = rows.iter().filter(|r| r.kept).max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re)).unwrap();
    assert!(best.theta.abs() < 1e-12);
    assert!((best.lambda.re - 2.0).abs() < 1e-10, "{}", best.lambda);
}

#[test]
fn verify_reports_only_the_sign_criterion() {
    let out = run(&["verify"]);
    assert_eq!(code(&out), 4);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let failed: Vec<_> = stdout.lines().filter(|l| l.starts_with("[FAIL]")).collect();
    assert_eq!(failed.len(), 1, "{stdout}");
    assert!(failed[0].contains(" 2 transversality"));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 9);
}

#[test]
fn verify_reads_config_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "r = 2\ntol.amplitude_slope = 0.001\n").unwrap();
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("[FAIL]  3 ")), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("[PASS]  8 ")), "{stdout}");
}
