//! End-to-end checks of the `sitsim` binary.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::{Command, Output};

fn sitsim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sitsim"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn dressed_contract_and_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(dir.path(), &["dressed"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("dressed.csv"));
    assert_eq!(h, ["tau", "theta", "omega_plus", "phi_dyn", "phi_geo"]);
    let dyn_final = rows.last().unwrap()[3];
    assert!((dyn_final - TAU).abs() < 1e-3, "{dyn_final}");

    let zero = tempfile::tempdir().unwrap();
    assert!(sitsim(zero.path(), &["dressed", "--set", "pulse_area=0"])
        .status
        .success());
    let (_, rows) = read_csv(&zero.path().join("dressed.csv"));
    assert!(column(&rows, 1).iter().all(|t| *t == 0.0));
}

#[test]
fn evolve_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(
        dir.path(),
        &["evolve", "--set", "gamma_mhz=0", "--set", "rho0=\"plus\""],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(
        h,
        ["tau", "rho11", "re_rho12", "im_rho12", "rho22", "purity"]
    );
    assert!(column(&rows, 5).iter().all(|p| (p - 1.0).abs() <= 1e-8));
    let n = manifest(dir.path())["grid"]["n"].as_u64().unwrap() as usize;
    assert_eq!(rows.len(), n);

    let decay = tempfile::tempdir().unwrap();
    let o = sitsim(
        decay.path(),
        &[
            "evolve",
            "--set",
            "pulse_area=0",
            "--set",
            "rho0=\"excited\"",
            "--set",
            "gamma_mhz=50",
            "--set",
            "omega0_ghz=5.2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&decay.path().join("trajectory.csv"));
    for r in &rows {
        assert!((r[1] - (-0.05 * r[0]).exp()).abs() <= 1e-6, "tau {}", r[0]);
    }
}

#[test]
fn envelope_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(dir.path(), &["envelope", "--set", "c0_per_ns=0"]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&dir.path().join("envelope.csv"));
    assert_eq!(
        h,
        [
            "tau",
            "envelope_closed",
            "envelope_oracle",
            "phi",
            "area",
            "rel_dev"
        ]
    );
    assert!(column(&rows, 5).iter().all(|d| *d <= 1e-4));
    assert!((rows.last().unwrap()[4] - TAU).abs() < 1e-3);
    let (h, _) = read_csv(&dir.path().join("pulse_state.csv"));
    assert_eq!(h, ["tau", "envelope", "phi", "area"]);
}

#[test]
fn regime_violation_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(dir.path(), &["envelope", "--set", "c0_per_ns=2.5"]);
    assert!(o.status.success());
    let m = manifest(dir.path());
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn adaptive_diagnostic_lands_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sitsim(dir.path(), &["envelope", "--set", "adaptive=true"])
        .status
        .success());
    let m = manifest(dir.path());
    let diff = m["parameters_internal"]["diagnostics"]["adaptive"]["difference"]
        .as_f64()
        .unwrap();
    assert!(diff.abs() < 1e-8);
}

#[test]
fn ramify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(dir.path(), &["ramify"]);
    assert!(o.status.success());
    let (h, rows) = read_csv(&dir.path().join("ridge_trace.csv"));
    assert_eq!(
        h,
        ["t", "x_peak_transparent", "x_peak_remainder", "separation"]
    );
    assert!(rows.windows(2).all(|w| w[1][3] > w[0][3]));
    let (h, _) = read_csv(&dir.path().join("ramification_surface.csv"));
    assert_eq!(h, ["x_over_v", "t", "envelope"]);

    let fixed = tempfile::tempdir().unwrap();
    let o = sitsim(
        fixed.path(),
        &["ramify", "--set", "area0=6.283185307179586"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("envelope"));
}

#[test]
fn sweep_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(dir.path(), &["sweep", "--workers", "2"]);
    assert!(o.status.success());
    let mut curves = Vec::new();
    for g in ["5", "50", "100", "150"] {
        let (h, rows) = read_csv(&dir.path().join(format!("sweep_gamma_{g}MHz.csv")));
        assert_eq!(h, ["tau", "area", "phi"]);
        assert!(column(&rows, 1).iter().all(|a| *a <= TAU + 1e-12));
        curves.push(column(&rows, 2));
    }
    for w in curves.windows(2) {
        assert!(w[0].iter().zip(&w[1]).all(|(lo, hi)| hi >= lo));
    }
    let m = manifest(dir.path());
    assert_eq!(m["outputs"].as_array().unwrap().len(), 5);
    assert!(m["warnings"].as_array().unwrap().is_empty());

    let bad = tempfile::tempdir().unwrap();
    let o = sitsim(bad.path(), &["sweep", "--set", "sweep_gamma_mhz=[5, -1]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_records_units_prefactor_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        sitsim(dir.path(), &["phase", "--set", "prefactor=\"printed\""])
            .status
            .success()
    );
    let entries: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".json"))
        .collect();
    assert_eq!(entries.len(), 1);
    let m = manifest(dir.path());
    assert!(m["prefactor"].as_str().unwrap().contains("P = 4"));
    assert_eq!(m["parameters_user"]["omega_ghz"].as_f64(), Some(5.0));
    let w = m["parameters_internal"]["omega"].as_f64().unwrap();
    assert!((w - 10.0 * std::f64::consts::PI).abs() < 1e-12);
    let k = m["units"]["mhz_to_rad_per_ns"].as_f64().unwrap();
    assert!((k - TAU * 1e-3).abs() < 1e-18);
    assert_eq!(m["grid"]["sha256"].as_str().unwrap().len(), 64);
    assert!(m["geometric_sign_convention"].is_string());
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "m = 3.0\nhorizon_ns = 2.0\n").unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_sitsim"))
        .args(["phase", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--set", "m=4.0"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let m = manifest(&out);
    assert_eq!(m["parameters_user"]["m"].as_f64(), Some(4.0));
    assert_eq!(m["grid"]["tau1_ns"].as_f64(), Some(2.0));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        sitsim(dir.path(), &["phase", "--set", "bogus=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        sitsim(dir.path(), &["phase", "--grid-n", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(sitsim(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(
        sitsim(dir.path(), &["phase", "--set", "v_over_c=2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn invariant_violation_exits_3() {
    // a strong ohmic bath is invisible to the step rule and blows up RK4
    let dir = tempfile::tempdir().unwrap();
    let o = sitsim(
        dir.path(),
        &[
            "evolve",
            "--set",
            "bath=\"ohmic\"",
            "--set",
            "ohmic_eta=5000",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(manifest(dir.path())["status"]
        .as_str()
        .unwrap()
        .starts_with("error"));
}
