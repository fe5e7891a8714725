use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::adaptive::{ControllerConfig, ProjectionSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scenario::aircraft::{demo_config_for, DemoVariant, DEMO_INTERVAL, DEMO_STEP_OFFSET};
use crate::scenario::config::Scenario;
use crate::sim::closed_loop::{simulate_closed_loop_with, SimulationOptions, SimulationResult, SimulationSetup};
use crate::sim::trace::Trace;
use crate::stability::bounds::{beta_xtilde, tracking_error_bound, PerformanceBounds};
use crate::stability::certificate::{certify_dwell_time, find_common_lyapunov, StabilityCertificate};
use crate::stability::lmi::LmiOptions;
use crate::stability::vertices::{enumerate_vertices, vertex_matrices, PolytopeVertexSet};

/// Window after each step onset searched for the peak pitch acceleration.
pub const PITCH_PEAK_WINDOW: f64 = 1.0;
/// Window for the least-squares pitch-rate slope.
pub const PITCH_SLOPE_WINDOW: f64 = 0.2;
/// Length of the per-interval overlays.
pub const OVERLAY_WINDOW: f64 = 3.0;

pub struct Certification {
    pub certificate: StabilityCertificate,
    pub vertices: PolytopeVertexSet,
    pub vertex_matrices: Vec<Vec<Matrix>>,
    pub runtime_s: f64,
}

impl Scenario {
    pub fn vertex_data(&self) -> Result<(PolytopeVertexSet, Vec<Vec<Matrix>>)> {
        let vertices = enumerate_vertices(&self.bounds);
        let mats = vertex_matrices(&self.family, &self.filter, &vertices, &self.kp)?;
        Ok((vertices, mats))
    }

    pub fn partition(&self) -> (usize, usize, usize) {
        (self.family[0].n(), self.filter.nf(), self.family[0].m())
    }
}

/// Tries a common Lyapunov matrix first and falls back to per-mode
/// matrices with a dwell time, which must then be covered by the
/// schedule's minimum gap.
pub fn certify(scenario: &Scenario, opts: &LmiOptions) -> Result<Certification> {
    let start = Instant::now();
    let (vertices, by_mode) = scenario.vertex_data()?;
    let partition = scenario.partition();
    let flat: Vec<Matrix> = by_mode.iter().flatten().cloned().collect();
    let certificate = match find_common_lyapunov(&flat, partition, scenario.a_star, opts) {
        Ok(c) => c,
        Err(Error::NotFound(common)) => match certify_dwell_time(&by_mode, scenario.a_star, partition, opts) {
            Ok(c) => c,
            Err(Error::NotFound(dwell)) => {
                return Err(Error::NotFound(format!("{common}; dwell-time search: {dwell}")));
            }
            Err(e) => return Err(e),
        },
        Err(e) => return Err(e),
    };
    let dwell = scenario.switching.dwell_time();
    if !certificate.admits_dwell(dwell) {
        return Err(Error::NotFound(format!(
            "certified dwell time {:.6} s exceeds the schedule's minimum gap {dwell:.6} s",
            certificate.tau_d
        )));
    }
    Ok(Certification { certificate, vertices, vertex_matrices: by_mode, runtime_s: start.elapsed().as_secs_f64() })
}

/// Loads the scenario's certificate file if it names one (re-verifying it
/// against the scenario's vertices), otherwise solves.
pub fn obtain_certificate(scenario: &Scenario, opts: &LmiOptions) -> Result<Certification> {
    let Some(path) = &scenario.certificate_path else {
        return certify(scenario, opts);
    };
    let start = Instant::now();
    let text = std::fs::read_to_string(path)?;
    let mut certificate: StabilityCertificate = serde_json::from_str(&text)?;
    let (vertices, by_mode) = scenario.vertex_data()?;
    if certificate.partition != scenario.partition() {
        return Err(Error::Config(format!("certificate {path} does not match the scenario's state partition")));
    }
    if certificate.p_bars.len() != 1 && certificate.p_bars.len() != scenario.family.len() {
        return Err(Error::Config(format!("certificate {path} has the wrong number of matrices")));
    }
    certificate.margins = certificate.verify(&by_mode)?;
    if !certificate.admits_dwell(scenario.switching.dwell_time()) {
        return Err(Error::NotFound(format!("loaded certificate needs dwell time {:.6} s", certificate.tau_d)));
    }
    Ok(Certification { certificate, vertices, vertex_matrices: by_mode, runtime_s: start.elapsed().as_secs_f64() })
}

/// Maxima over the recorded rows together with the theoretical bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub gamma: f64,
    pub dt: f64,
    pub steps: usize,
    pub rows: usize,
    /// max ‖x̃‖ over the emitted rows.
    pub max_x_tilde: f64,
    /// max ‖x_ref − x‖ over the emitted rows.
    pub max_tracking_state: f64,
    /// max ‖u_ref − u‖ over the emitted rows.
    pub max_tracking_input: f64,
    /// The same maxima over every integration step.
    pub step_max_x_tilde: f64,
    pub step_max_tracking_state: f64,
    pub step_max_tracking_input: f64,
    pub max_projection_ratio: f64,
    /// max |x₁ − x_ref,1| / max |x_ref,1 − x_ref,1(0)|.
    pub first_state_relative_deviation: f64,
    pub bounds: PerformanceBounds,
    pub prediction_bound_holds: bool,
    pub state_bound_holds: bool,
    pub input_bound_holds: bool,
    pub runtime_s: f64,
}

impl Metrics {
    pub fn bounds_hold(&self) -> bool {
        self.prediction_bound_holds && self.state_bound_holds && self.input_bound_holds
    }
}

pub struct SimulationReport {
    pub result: SimulationResult,
    pub metrics: Metrics,
}

/// Step actually used: the requested `dt`, shrunk if needed so that
/// `dt·√(Γ‖BᵀPB‖) ≤ 0.2`.
pub fn effective_dt(requested: f64, controller: &ControllerConfig, scenario: &Scenario) -> f64 {
    requested.min(controller.max_stable_dt(&scenario.family))
}

pub fn controller_for(scenario: &Scenario, cert: &StabilityCertificate, gamma: f64) -> Result<ControllerConfig> {
    ControllerConfig::new(
        scenario.filter.clone(),
        gamma,
        scenario.kp.clone(),
        cert.adaptation_weights(scenario.family.len()),
        ProjectionSet::for_bounds(&scenario.bounds)?,
    )
}

pub fn performance_bounds(
    scenario: &Scenario,
    certification: &Certification,
    gamma: f64,
) -> Result<PerformanceBounds> {
    let cert = &certification.certificate;
    let beta = beta_xtilde(&scenario.bounds, cert.lambda)?;
    tracking_error_bound(cert, &scenario.family, &scenario.filter, &certification.vertices.omegas(), beta, gamma, scenario.a)
}

/// Closed-loop run with adaptation gain `gamma` plus its metrics.
pub fn simulate(scenario: &Scenario, certification: &Certification, gamma: f64) -> Result<SimulationReport> {
    let start = Instant::now();
    let controller = controller_for(scenario, &certification.certificate, gamma)?;
    let dt = effective_dt(scenario.dt, &controller, scenario);
    let setup = SimulationSetup {
        family: &scenario.family,
        bounds: &scenario.bounds,
        realization: &scenario.realization,
        switching: &scenario.switching,
        controller: &controller,
        command: &scenario.command,
        x0: &scenario.x0,
        t_final: scenario.t_final,
        dt,
    };
    let opts = SimulationOptions { record_every: scenario.record_every, ..SimulationOptions::default() };
    let result = simulate_closed_loop_with(&setup, &opts)?;
    let bounds = performance_bounds(scenario, certification, gamma)?;
    let metrics = compute_metrics(scenario, &result, bounds, dt, start.elapsed().as_secs_f64());
    Ok(SimulationReport { result, metrics })
}

fn compute_metrics(
    scenario: &Scenario,
    r: &SimulationResult,
    bounds: PerformanceBounds,
    dt: f64,
    runtime_s: f64,
) -> Metrics {
    let first_dev = r.x.rows().zip(r.x_ref.rows()).map(|(x, xr)| (x[0] - xr[0]).abs()).fold(0.0, f64::max);
    let x_ref0 = r.x_ref.row(0)[0];
    let ref_excursion = r.x_ref.rows().map(|xr| (xr[0] - x_ref0).abs()).fold(0.0, f64::max);
    let pk = r.peaks;
    Metrics {
        scenario: scenario.name.clone(),
        gamma: bounds.gamma,
        dt,
        steps: r.steps,
        rows: r.time_grid.len(),
        max_x_tilde: r.x_tilde.max_norm(),
        max_tracking_state: r.x.max_distance(&r.x_ref),
        max_tracking_input: r.u.max_distance(&r.u_ref),
        step_max_x_tilde: pk.x_tilde,
        step_max_tracking_state: pk.tracking_state,
        step_max_tracking_input: pk.tracking_input,
        max_projection_ratio: pk.projection_ratio,
        first_state_relative_deviation: if ref_excursion > 0.0 { first_dev / ref_excursion } else { first_dev },
        bounds,
        prediction_bound_holds: pk.x_tilde <= bounds.prediction_bound,
        state_bound_holds: pk.tracking_state <= bounds.tracking_bound_state,
        input_bound_holds: pk.tracking_input <= bounds.tracking_bound_input,
        runtime_s,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub dt: f64,
    pub max_x_tilde: f64,
    pub max_tracking_state: f64,
    pub max_tracking_input: f64,
    /// `√(β/Γ)`.
    pub prediction_bound: f64,
    /// Squared weighted-error bound, proportional to `1/Γ`.
    pub squared_error_bound: f64,
    pub tracking_bound_state: f64,
    pub tracking_bound_input: f64,
}

/// One independent run per `Γ`, in parallel. Errors use full-step maxima.
pub fn sweep_gamma(scenario: &Scenario, certification: &Certification, gammas: &[f64]) -> Result<Vec<SweepRow>> {
    if gammas.len() < 2 {
        return Err(Error::InvalidArgument(format!("a Γ sweep needs at least two values, got {}", gammas.len())));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidArgument(format!("Γ must be positive and finite, got {g}")));
    }
    gammas
        .par_iter()
        .map(|&gamma| {
            let rep = simulate(scenario, certification, gamma)?;
            let m = &rep.metrics;
            Ok(SweepRow {
                gamma,
                dt: m.dt,
                max_x_tilde: m.step_max_x_tilde,
                max_tracking_state: m.step_max_tracking_state,
                max_tracking_input: m.step_max_tracking_input,
                prediction_bound: m.bounds.prediction_bound,
                squared_error_bound: m.bounds.squared_error_bound,
                tracking_bound_state: m.bounds.tracking_bound_state,
                tracking_bound_input: m.bounds.tracking_bound_input,
            })
        })
        .collect()
}

/// Pitch response after one step onset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalResponse {
    pub interval: usize,
    pub mode: usize,
    pub label: String,
    pub onset: f64,
    /// Largest `|dq/dt|` within [`PITCH_PEAK_WINDOW`] of onset (deg/s²).
    pub peak_pitch_acceleration: f64,
    /// Least-squares slope of `q` over [`PITCH_SLOPE_WINDOW`] (deg/s²).
    pub initial_slope: f64,
}

/// Rows re-based to the step onset, for overlay plots.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlayRow {
    pub interval: usize,
    pub t_rel: f64,
    pub alpha: f64,
    pub alpha_ref: f64,
    pub q: f64,
    pub q_ref: f64,
    pub u: f64,
}

pub struct DemoReport {
    pub variant: DemoVariant,
    pub scenario: Scenario,
    pub certification: Certification,
    pub simulation: SimulationReport,
    pub intervals: Vec<IntervalResponse>,
    pub overlays: Vec<OverlayRow>,
    /// max/min of the peak pitch accelerations.
    pub peak_ratio: f64,
    /// max/min of the least-squares slopes.
    pub slope_ratio: f64,
    /// Largest jump of `u` between consecutive recorded rows.
    pub max_input_jump: f64,
}

/// Runs the built-in aircraft study. `gamma` and `dt` override the
/// built-in values when given.
pub fn aircraft_demo(variant: DemoVariant, gamma: Option<f64>, dt: Option<f64>) -> Result<DemoReport> {
    let mut cfg = demo_config_for(variant);
    if let Some(g) = gamma {
        cfg.controller.gamma = g;
    }
    if let Some(d) = dt {
        cfg.simulation.dt = d;
    }
    let scenario = cfg.build()?;
    let certification = certify(&scenario, &LmiOptions::default())?;
    let simulation = simulate(&scenario, &certification, scenario.gamma)?;
    let r = &simulation.result;
    let modes = scenario.switching.mode_indices();
    let mut intervals = Vec::with_capacity(modes.len());
    let mut overlays = Vec::new();
    for (k, &mode) in modes.iter().enumerate() {
        let onset = k as f64 * DEMO_INTERVAL + DEMO_STEP_OFFSET;
        intervals.push(IntervalResponse {
            interval: k,
            mode,
            label: scenario.family[mode].label().to_string(),
            onset,
            peak_pitch_acceleration: peak_rate(&r.time_grid, &r.x, 1, onset, onset + PITCH_PEAK_WINDOW),
            initial_slope: least_squares_slope(&r.time_grid, &r.x, 1, onset, onset + PITCH_SLOPE_WINDOW),
        });
        for (i, &t) in r.time_grid.iter().enumerate() {
            if t >= onset && t <= onset + OVERLAY_WINDOW {
                let (x, xr) = (r.x.row(i), r.x_ref.row(i));
                overlays.push(OverlayRow {
                    interval: k,
                    t_rel: t - onset,
                    alpha: x[0],
                    alpha_ref: xr[0],
                    q: x[1],
                    q_ref: xr[1],
                    u: r.u.row(i)[0],
                });
            }
        }
    }
    let peak_ratio = spread(intervals.iter().map(|i| i.peak_pitch_acceleration.abs()));
    let slope_ratio = spread(intervals.iter().map(|i| i.initial_slope.abs()));
    let max_input_jump = (1..r.u.len())
        .map(|i| (r.u.row(i)[0] - r.u.row(i - 1)[0]).abs())
        .fold(0.0, f64::max);
    Ok(DemoReport {
        variant,
        scenario,
        certification,
        simulation,
        intervals,
        overlays,
        peak_ratio,
        slope_ratio,
        max_input_jump,
    })
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// Largest `|Δy/Δt|` of component `c` between consecutive samples in `[t0, t1]`.
pub fn peak_rate(time: &[f64], trace: &Trace, c: usize, t0: f64, t1: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 1..time.len() {
        if time[i - 1] >= t0 && time[i] <= t1 && time[i] > time[i - 1] {
            let rate = (trace.row(i)[c] - trace.row(i - 1)[c]) / (time[i] - time[i - 1]);
            best = best.max(rate.abs());
        }
    }
    best
}

/// Least-squares slope of component `c` against time over `[t0, t1]`.
pub fn least_squares_slope(time: &[f64], trace: &Trace, c: usize, t0: f64, t1: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        time.iter().enumerate().filter(|(_, &t)| t >= t0 && t <= t1).map(|(i, &t)| (t, trace.row(i)[c])).collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / k, b + y / k));
    let (sty, stt) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    sty / stt
}
