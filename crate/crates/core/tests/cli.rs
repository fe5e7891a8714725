use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use l1switch::scenario::output::read_numeric_csv;
use l1switch::scenario::{Metrics, ScenarioConfig};
use l1switch::stability::{CertificateKind, StabilityCertificate};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l1switch"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two aircraft modes over 4 s, written next to the outputs.
fn short_config(dir: &Path, zero_uncertainty: bool) -> PathBuf {
    let mut cfg = ScenarioConfig::load(&configs().join("aircraft_switched.toml")).unwrap();
    cfg.switching.interval = None;
    cfg.switching.times = Some(vec![0.0, 2.0]);
    cfg.switching.modes = vec![0, 5];
    cfg.command.retain(|c| c.time < 4.0);
    cfg.command.push(l1switch::scenario::config::CommandStep { time: 1.0, value: vec![1.0] });
    cfg.simulation.t_final = 4.0;
    cfg.simulation.record_every = 7;
    if zero_uncertainty {
        cfg.realization[0].omega = vec![vec![1.0]];
        cfg.realization[0].theta = vec![vec![0.0], vec![0.0]];
        cfg.realization[0].sigma = vec![0.0];
    }
    let path = dir.join(if zero_uncertainty { "zero.toml" } else { "short.toml" });
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path
}

const UNSTABLE: &str = r#"
[plant]
[[plant.modes]]
label = "unstable"
a = [[1.0, 0.0], [0.0, 1.0]]
b = [[0.0], [1.0]]

[bounds]
theta_lower = [[0.0], [0.0]]
theta_upper = [[0.0], [0.0]]
sigma_lower = [0.0]
sigma_upper = [0.0]
omega_lower = [[1.0]]
omega_upper = [[1.0]]

[switching]
modes = [0]
times = [0.0]

[controller]
gamma = 100.0
filter = { kind = "constant", gain = 1.0 }
kp = "identity"

[simulation]
t_final = 1.0
"#;

#[test]
fn certify_aircraft_design() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "certify",
        "--config",
        configs().join("aircraft_switched.toml").to_str().unwrap(),
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.path().join("certificate.json")).unwrap();
    let cert: StabilityCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(cert.kind, CertificateKind::Common);
    assert_eq!(cert.mu, 1.0);
    let report = std::fs::read_to_string(out.path().join("certificate_report.txt")).unwrap();
    assert!(report.contains("common Lyapunov"));
}

#[test]
fn unstable_plant_is_not_certified() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unstable.toml");
    std::fs::write(&cfg, UNSTABLE).unwrap();
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("no certificate found"));
}

#[test]
fn missing_field_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, UNSTABLE.replace("a = [[1.0, 0.0], [0.0, 1.0]]\n", "")).unwrap();
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing field `a`"), "{}", stderr(&o));
}

#[test]
fn zero_uncertainty_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), true);
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Metrics = serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m.max_x_tilde, 0.0);
    assert_eq!(m.step_max_x_tilde, 0.0);
    assert!(m.bounds_hold());
}

#[test]
fn simulate_is_bitwise_reproducible_and_metrics_match_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), false);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("trace.csv")).unwrap());

    let (header, rows) = read_numeric_csv(&a.join("trace.csv")).unwrap();
    assert_eq!(
        header,
        ["t", "mode", "x1", "x2", "x_ref1", "x_ref2", "x_hat1", "x_hat2", "u", "u_ref", "theta_hat_1_1", "theta_hat_2_1", "sigma_hat", "omega_hat"]
    );
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let norm = |r: &Vec<f64>, p: &[&str], q: &[&str]| {
        p.iter().zip(q).map(|(i, j)| (r[col(i)] - r[col(j)]).powi(2)).sum::<f64>().sqrt()
    };
    let max = |f: &dyn Fn(&Vec<f64>) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let x_tilde = max(&|r| norm(r, &["x_hat1", "x_hat2"], &["x1", "x2"]));
    let tracking = max(&|r| norm(r, &["x1", "x2"], &["x_ref1", "x_ref2"]));
    let input = max(&|r| norm(r, &["u"], &["u_ref"]));

    let m: Metrics = serde_json::from_str(&std::fs::read_to_string(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m.rows, rows.len());
    assert_eq!(m.max_x_tilde, x_tilde);
    assert_eq!(m.max_tracking_state, tracking);
    assert_eq!(m.max_tracking_input, input);
    // decimated rows never exceed the per-step maxima
    assert!(m.max_x_tilde <= m.step_max_x_tilde);
    // rows at every switching and command time are present
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert!(t.contains(&1.0) && t.contains(&2.0) && t.contains(&4.0));
}

#[test]
fn sweep_rejects_a_single_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), false);
    let o = run(&["sweep-gamma", "--config", cfg.to_str().unwrap(), "--gamma", "1e4", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least two"));
}

#[test]
fn sweep_bound_columns_scale_with_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), false);
    let o = run(&[
        "sweep-gamma",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma",
        "1e3",
        "--gamma",
        "4e3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_numeric_csv(&dir.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    let c = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows[0][c("gamma")], 1e3);
    let half = rows[1][c("prediction_bound")] / rows[0][c("prediction_bound")];
    assert!((half - 0.5).abs() <= 1e-15, "{half}");
    let quarter = rows[1][c("squared_error_bound")] / rows[0][c("squared_error_bound")];
    assert!((quarter - 0.25).abs() <= 1e-15, "{quarter}");
    assert!(rows[1][c("max_x_tilde")] < rows[0][c("max_x_tilde")]);
}

#[test]
fn dt_override_and_seed_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), true);
    let metrics = |dt: &str| {
        let out = dir.path().join(dt);
        let o = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--dt",
            dt,
            "--seed",
            "7",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_str::<Metrics>(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap()
    };
    // below the stiffness cap the override is used as given
    let fine = metrics("5e-5");
    assert_eq!(fine.dt, 5e-5);
    assert_eq!(fine.steps, 80000);
    // above it the step is clamped
    let coarse = metrics("1e-3");
    assert!(coarse.dt < 1e-3 && coarse.dt > 5e-5, "{}", coarse.dt);
    // plus one extra step per off-grid breakpoint at t = 1 and t = 2
    let base = (4.0 / coarse.dt).ceil() as usize;
    assert!((base..=base + 2).contains(&coarse.steps), "{} vs {base}", coarse.steps);
}

#[test]
fn unknown_demo_variant_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["aircraft-demo", "--variant", "hover", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
