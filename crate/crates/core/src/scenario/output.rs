//! CSV, JSON and plain-text writers. Floats use `{:.16e}` (17 significant
//! digits), which round-trips every f64.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::pipeline::{Certification, DemoReport, Metrics, OverlayRow, SweepRow};
use crate::sim::closed_loop::SimulationResult;
use crate::stability::certificate::{CertificateKind, StabilityCertificate};

fn num(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    write!(w, "{v:.16e}")
}

fn names(prefix: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=dim).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn matrix_names(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    if rows * cols == 1 {
        return vec![prefix.to_string()];
    }
    // column-major, matching the trace layout
    (1..=cols).flat_map(|c| (1..=rows).map(move |r| format!("{prefix}_{r}_{c}"))).collect()
}

/// Header of the trace CSV for `n` states and `m` inputs.
pub fn trace_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "mode".to_string()];
    h.extend(names("x", n));
    h.extend(names("x_ref", n));
    h.extend(names("x_hat", n));
    h.extend(names("u", m));
    h.extend(names("u_ref", m));
    h.extend(matrix_names("theta_hat", n, m));
    h.extend(names("sigma_hat", m));
    h.extend(matrix_names("omega_hat", m, m));
    h
}

pub fn write_trace_csv(path: &Path, r: &SimulationResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", trace_header(r.x.dim(), r.u.dim()).join(","))?;
    for (k, &t) in r.time_grid.iter().enumerate() {
        num(&mut w, t)?;
        write!(w, ",{}", r.mode[k])?;
        for tr in [&r.x, &r.x_ref, &r.x_hat, &r.u, &r.u_ref, &r.theta_hat, &r.sigma_hat, &r.omega_hat] {
            for &v in tr.row(k) {
                w.write_all(b",")?;
                num(&mut w, v)?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 9] = [
    "gamma",
    "dt",
    "max_x_tilde",
    "max_tracking_state",
    "max_tracking_input",
    "prediction_bound",
    "squared_error_bound",
    "tracking_bound_state",
    "tracking_bound_input",
];

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", SWEEP_HEADER.join(","))?;
    for r in rows {
        let vals = [
            r.gamma,
            r.dt,
            r.max_x_tilde,
            r.max_tracking_state,
            r.max_tracking_input,
            r.prediction_bound,
            r.squared_error_bound,
            r.tracking_bound_state,
            r.tracking_bound_input,
        ];
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            num(&mut w, *v)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_overlay_csv(path: &Path, rows: &[OverlayRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "interval,t_rel,alpha,alpha_ref,q,q_ref,u")?;
    for r in rows {
        write!(w, "{}", r.interval)?;
        for v in [r.t_rel, r.alpha, r.alpha_ref, r.q, r.q_ref, r.u] {
            w.write_all(b",")?;
            num(&mut w, v)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_intervals_csv(path: &Path, demo: &DemoReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "interval,mode,label,onset,peak_pitch_acceleration,initial_slope")?;
    for i in &demo.intervals {
        write!(w, "{},{},{},", i.interval, i.mode, i.label)?;
        num(&mut w, i.onset)?;
        w.write_all(b",")?;
        num(&mut w, i.peak_pitch_acceleration)?;
        w.write_all(b",")?;
        num(&mut w, i.initial_slope)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by this module: header plus numeric columns.
/// Non-numeric fields (labels) read as NaN.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    Ok((header, rows))
}

pub fn certificate_report(c: &Certification) -> String {
    let cert: &StabilityCertificate = &c.certificate;
    let mut s = String::new();
    let kind = match cert.kind {
        CertificateKind::Common => "common Lyapunov matrix (arbitrary switching)",
        CertificateKind::DwellTime => "per-mode Lyapunov matrices with dwell time",
    };
    let _ = writeln!(s, "certificate: {kind}");
    let (n, nf, m) = cert.partition;
    let _ = writeln!(s, "augmented state: n = {n}, n_f = {nf}, m = {m}");
    let _ = writeln!(s, "vertices per mode: {}", c.vertices.len());
    let _ = writeln!(s, "modes: {}", c.vertex_matrices.len());
    let _ = writeln!(s, "lambda = {:.6e}", cert.lambda);
    let _ = writeln!(s, "mu = {:.6e}", cert.mu);
    let _ = writeln!(s, "tau_d = {:.6e} s (a* = {})", cert.tau_d, cert.a_star);
    let _ = writeln!(s, "margin P >= I: {:.6e}", cert.margins.lower);
    let _ = writeln!(s, "margin Lyapunov: {:.6e}", cert.margins.lyapunov);
    let _ = writeln!(s, "margin jump: {:.6e}", cert.margins.jump);
    let _ = writeln!(s, "solver iterations: {}", cert.iterations);
    let _ = writeln!(s, "runtime: {:.3} s", c.runtime_s);
    s
}

pub fn metrics_report(m: &Metrics) -> String {
    let mut s = String::new();
    let flag = |ok: bool| if ok { "ok" } else { "VIOLATED" };
    let b = &m.bounds;
    let _ = writeln!(s, "scenario: {}", m.scenario);
    let _ = writeln!(s, "gamma = {:.6e}, dt = {:.6e}, steps = {}, rows = {}", m.gamma, m.dt, m.steps, m.rows);
    let _ = writeln!(
        s,
        "max |x_tilde|     = {:.6e}  bound {:.6e}  [{}]",
        m.step_max_x_tilde,
        b.prediction_bound,
        flag(m.prediction_bound_holds)
    );
    let _ = writeln!(
        s,
        "max |x_ref - x|   = {:.6e}  bound {:.6e}  [{}]",
        m.step_max_tracking_state,
        b.tracking_bound_state,
        flag(m.state_bound_holds)
    );
    let _ = writeln!(
        s,
        "max |u_ref - u|   = {:.6e}  bound {:.6e}  [{}]",
        m.step_max_tracking_input,
        b.tracking_bound_input,
        flag(m.input_bound_holds)
    );
    let _ = writeln!(s, "first-state deviation / reference excursion = {:.6e}", m.first_state_relative_deviation);
    let _ = writeln!(s, "largest estimate norm / projection radius = {:.6e}", m.max_projection_ratio);
    let _ = writeln!(s, "beta = {:.6e}, nu = {:.1e}, g = {:.6e}, a = {}", b.beta, b.nu, b.g, b.a);
    let _ = writeln!(s, "runtime: {:.3} s", m.runtime_s);
    s
}

pub fn demo_report(d: &DemoReport) -> String {
    let mut s = format!("aircraft demo ({})\n", d.variant);
    s.push_str(&certificate_report(&d.certification));
    s.push_str(&metrics_report(&d.simulation.metrics));
    let _ = writeln!(s, "interval  model              peak dq/dt   LS slope (0.2 s)");
    for i in &d.intervals {
        let _ = writeln!(
            s,
            "{:>8}  {:<17} {:>11.4}  {:>11.4}",
            i.interval, i.label, i.peak_pitch_acceleration, i.initial_slope
        );
    }
    let _ = writeln!(s, "peak pitch-acceleration ratio max/min = {:.4}", d.peak_ratio);
    let _ = writeln!(s, "LS slope ratio max/min = {:.4}", d.slope_ratio);
    let _ = writeln!(s, "largest elevator change between rows = {:.4e}", d.max_input_jump);
    s
}
