//! C interface to `l1switch`.
//!
//! Every fallible call returns an [`L1sStatus`]; on failure the message is
//! available from [`l1s_last_error`] on the same thread. Handles are
//! opaque, owned by the caller, and released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use l1switch::controller::projection::{projection, ProjectionConfig};
use l1switch::linalg::Vector;
use l1switch::scenario::output::write_trace_csv;
use l1switch::scenario::{self, Certification, DemoVariant, Scenario, ScenarioConfig, SimulationReport};
use l1switch::stability::{dwell_time, prediction_error_bound, switching_ratio, CertificateKind, LmiOptions};
use l1switch::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L1sStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Dimension = 4,
    InvalidArgument = 5,
    Singular = 6,
    NotFound = 7,
    Numerical = 8,
    Io = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L1sVariant {
    Switched = 0,
    Fixed = 1,
}

/// Recorded signal selector for [`l1s_simulation_copy`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L1sSignal {
    Time = 0,
    Mode = 1,
    State = 2,
    ReferenceState = 3,
    PredictorState = 4,
    Input = 5,
    ReferenceInput = 6,
}

pub struct L1sScenario {
    inner: Scenario,
}

pub struct L1sCertificate {
    inner: Certification,
}

pub struct L1sSimulation {
    inner: SimulationReport,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct L1sCertificateSummary {
    /// 0 common, 1 dwell time.
    pub kind: i32,
    pub lambda: f64,
    pub mu: f64,
    pub tau_d: f64,
    pub margin_lower: f64,
    pub margin_lyapunov: f64,
    pub margin_jump: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct L1sMetrics {
    pub gamma: f64,
    pub dt: f64,
    pub rows: usize,
    pub max_x_tilde: f64,
    pub max_tracking_state: f64,
    pub max_tracking_input: f64,
    pub prediction_bound: f64,
    pub tracking_bound_state: f64,
    pub tracking_bound_input: f64,
    pub bounds_hold: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> L1sStatus {
    match e {
        Error::Dimension(_) => L1sStatus::Dimension,
        Error::InvalidArgument(_) => L1sStatus::InvalidArgument,
        Error::Singular { .. } => L1sStatus::Singular,
        Error::NonFinite { .. } | Error::ProjectionEscape { .. } | Error::Divergence { .. } => L1sStatus::Numerical,
        Error::NotFound(_) => L1sStatus::NotFound,
        Error::Config(_) | Error::Json(_) => L1sStatus::Config,
        Error::Io(_) => L1sStatus::Io,
    }
}

struct Fail(L1sStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> L1sStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => L1sStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            L1sStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(L1sStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(L1sStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn l1s_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn l1s_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_scenario_from_toml(text: *const c_char, out: *mut *mut L1sScenario) -> L1sStatus {
    guard(|| {
        let text = as_str(text, "text")?;
        let inner = ScenarioConfig::from_toml(text)?.build()?;
        put(out, L1sScenario { inner })
    })
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_scenario_from_file(path: *const c_char, out: *mut *mut L1sScenario) -> L1sStatus {
    guard(|| {
        let path = as_str(path, "path")?;
        let inner = ScenarioConfig::load(Path::new(path))?.build()?;
        put(out, L1sScenario { inner })
    })
}

/// Built-in transport-aircraft scenario.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_scenario_aircraft(variant: L1sVariant, out: *mut *mut L1sScenario) -> L1sStatus {
    guard(|| {
        let v = match variant {
            L1sVariant::Switched => DemoVariant::Switched,
            L1sVariant::Fixed => DemoVariant::Fixed,
        };
        let inner = scenario::aircraft::demo_config_for(v).build()?;
        put(out, L1sScenario { inner })
    })
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn l1s_scenario_modes(s: *const L1sScenario) -> usize {
    s.as_ref().map_or(0, |s| s.inner.family.len())
}

/// # Safety
/// `s` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn l1s_scenario_free(s: *mut L1sScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Solves for a stability certificate.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_certify(s: *const L1sScenario, out: *mut *mut L1sCertificate) -> L1sStatus {
    guard(|| {
        let s = as_ref(s, "scenario")?;
        let inner = scenario::certify(&s.inner, &LmiOptions::default())?;
        put(out, L1sCertificate { inner })
    })
}

/// # Safety
/// `c` must be a live certificate handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_certificate_summary(
    c: *const L1sCertificate,
    out: *mut L1sCertificateSummary,
) -> L1sStatus {
    guard(|| {
        let c = &as_ref(c, "certificate")?.inner.certificate;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = L1sCertificateSummary {
            kind: match c.kind {
                CertificateKind::Common => 0,
                CertificateKind::DwellTime => 1,
            },
            lambda: c.lambda,
            mu: c.mu,
            tau_d: c.tau_d,
            margin_lower: c.margins.lower,
            margin_lyapunov: c.margins.lyapunov,
            margin_jump: c.margins.jump,
        };
        Ok(())
    })
}

/// Certificate as a JSON document; free it with [`l1s_string_free`].
///
/// # Safety
/// `c` must be a live certificate handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_certificate_to_json(c: *const L1sCertificate, out: *mut *mut c_char) -> L1sStatus {
    guard(|| {
        let c = as_ref(c, "certificate")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = serde_json::to_string(&c.inner.certificate).map_err(Error::from)?;
        *out = CString::new(text).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn l1s_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `c` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn l1s_certificate_free(c: *mut L1sCertificate) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Closed-loop run with adaptation gain `gamma`; a non-positive value uses
/// the scenario's own gain.
///
/// # Safety
/// `s` and `c` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_simulate(
    s: *const L1sScenario,
    c: *const L1sCertificate,
    gamma: f64,
    out: *mut *mut L1sSimulation,
) -> L1sStatus {
    guard(|| {
        let s = &as_ref(s, "scenario")?.inner;
        let c = &as_ref(c, "certificate")?.inner;
        let gamma = if gamma > 0.0 { gamma } else { s.gamma };
        let inner = scenario::simulate(s, c, gamma)?;
        put(out, L1sSimulation { inner })
    })
}

/// # Safety
/// `sim` must be a live simulation handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_simulation_metrics(sim: *const L1sSimulation, out: *mut L1sMetrics) -> L1sStatus {
    guard(|| {
        let m = &as_ref(sim, "simulation")?.inner.metrics;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = L1sMetrics {
            gamma: m.gamma,
            dt: m.dt,
            rows: m.rows,
            max_x_tilde: m.step_max_x_tilde,
            max_tracking_state: m.step_max_tracking_state,
            max_tracking_input: m.step_max_tracking_input,
            prediction_bound: m.bounds.prediction_bound,
            tracking_bound_state: m.bounds.tracking_bound_state,
            tracking_bound_input: m.bounds.tracking_bound_input,
            bounds_hold: m.bounds_hold(),
        };
        Ok(())
    })
}

/// Number of recorded rows, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn l1s_simulation_rows(sim: *const L1sSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.inner.result.time_grid.len())
}

/// Copies component `component` of a recorded signal into `buf`, which
/// must hold at least [`l1s_simulation_rows`] values. `component` is
/// ignored for time and mode.
///
/// # Safety
/// `sim` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn l1s_simulation_copy(
    sim: *const L1sSimulation,
    signal: L1sSignal,
    component: usize,
    buf: *mut f64,
    len: usize,
) -> L1sStatus {
    guard(|| {
        let r = &as_ref(sim, "simulation")?.inner.result;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let rows = r.time_grid.len();
        if len < rows {
            return Err(Fail(L1sStatus::InvalidArgument, format!("buffer holds {len} values, need {rows}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, rows);
        let trace = match signal {
            L1sSignal::Time => {
                out.copy_from_slice(&r.time_grid);
                return Ok(());
            }
            L1sSignal::Mode => {
                for (o, &m) in out.iter_mut().zip(&r.mode) {
                    *o = m as f64;
                }
                return Ok(());
            }
            L1sSignal::State => &r.x,
            L1sSignal::ReferenceState => &r.x_ref,
            L1sSignal::PredictorState => &r.x_hat,
            L1sSignal::Input => &r.u,
            L1sSignal::ReferenceInput => &r.u_ref,
        };
        if component >= trace.dim() {
            return Err(Fail(
                L1sStatus::InvalidArgument,
                format!("component {component} out of range for a signal of size {}", trace.dim()),
            ));
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = trace.row(k)[component];
        }
        Ok(())
    })
}

/// Writes the recorded trace as CSV.
///
/// # Safety
/// `sim` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn l1s_simulation_write_csv(sim: *const L1sSimulation, path: *const c_char) -> L1sStatus {
    guard(|| {
        let r = &as_ref(sim, "simulation")?.inner.result;
        let path = as_str(path, "path")?;
        write_trace_csv(Path::new(path), r)?;
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn l1s_simulation_free(sim: *mut L1sSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Projection operator applied to vectors of length `n`.
///
/// # Safety
/// `theta`, `y` readable and `out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn l1s_projection(
    theta: *const f64,
    y: *const f64,
    n: usize,
    theta_max: f64,
    epsilon: f64,
    out: *mut f64,
) -> L1sStatus {
    guard(|| {
        if theta.is_null() || y.is_null() || out.is_null() {
            return Err(null("vector argument"));
        }
        let cfg = ProjectionConfig::new(theta_max, epsilon)?;
        let th = Vector::from_column_slice(std::slice::from_raw_parts(theta, n));
        let yv = Vector::from_column_slice(std::slice::from_raw_parts(y, n));
        let p = projection(&th, &yv, &cfg);
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(p.as_slice());
        Ok(())
    })
}

/// `√(β/Γ)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_prediction_bound(beta: f64, gamma: f64, out: *mut f64) -> L1sStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = prediction_error_bound(beta, gamma)?;
        Ok(())
    })
}

/// `ln μ / ((1 − a*) λ)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_dwell_time(mu: f64, lambda: f64, a_star: f64, out: *mut f64) -> L1sStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = dwell_time(mu, lambda, a_star)?;
        Ok(())
    })
}

/// Switching factor of the tracking bound, with its limit at `μ = 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn l1s_switching_ratio(mu: f64, a: f64, a_star: f64, out: *mut f64) -> L1sStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = switching_ratio(mu, a, a_star)?;
        Ok(())
    })
}
