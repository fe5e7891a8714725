use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::stability::lmi::{solve_lyapunov_lmi, LmiOptions, LmiOutcome};

/// Minimum eigenvalue margin every returned certificate must show when
/// re-verified.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// One `P̄` for every mode; arbitrary switching.
    Common,
    /// One `P̄_i` per mode; switching slower than `τ_d`.
    DwellTime,
}

/// Worst-case eigenvalue margins of the certified inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationMargins {
    /// `min_i λ_min(P̄_i) − 1`.
    pub lower: f64,
    /// Common: `min λ_min(−(ĀᵀP̄ + P̄Ā)) − 1`.
    /// Dwell time: `min λ_min(−(ĀᵀP̄_i + P̄_iĀ + λP̄_i))`.
    pub lyapunov: f64,
    /// `min_{i,j} λ_min(μP̄_j − P̄_i) / max_i ‖P̄_i‖`; zero when all modes
    /// share one matrix.
    pub jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CertificateDoc", into = "CertificateDoc")]
pub struct StabilityCertificate {
    pub kind: CertificateKind,
    /// One matrix for a common certificate, otherwise one per mode.
    pub p_bars: Vec<Matrix>,
    pub lambda: f64,
    pub mu: f64,
    pub tau_d: f64,
    pub a_star: f64,
    /// Block sizes `(n, n_f, m)` of the augmented state.
    pub partition: (usize, usize, usize),
    pub margins: VerificationMargins,
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    kind: CertificateKind,
    p_bars: Vec<Vec<Vec<f64>>>,
    lambda: f64,
    mu: f64,
    tau_d: f64,
    a_star: f64,
    partition: [usize; 3],
    margins: VerificationMargins,
    #[serde(default)]
    iterations: usize,
}

impl TryFrom<CertificateDoc> for StabilityCertificate {
    type Error = Error;

    fn try_from(d: CertificateDoc) -> Result<Self> {
        let p_bars = d.p_bars.iter().map(|rows| linalg::from_rows(rows)).collect::<Result<Vec<_>>>()?;
        let dim = d.partition.iter().sum::<usize>();
        if p_bars.is_empty() || p_bars.iter().any(|p| p.shape() != (dim, dim)) {
            return Err(Error::Config("certificate matrices do not match its partition".into()));
        }
        Ok(Self {
            kind: d.kind,
            p_bars,
            lambda: d.lambda,
            mu: d.mu,
            tau_d: d.tau_d,
            a_star: d.a_star,
            partition: (d.partition[0], d.partition[1], d.partition[2]),
            margins: d.margins,
            iterations: d.iterations,
        })
    }
}

impl From<StabilityCertificate> for CertificateDoc {
    fn from(c: StabilityCertificate) -> Self {
        Self {
            kind: c.kind,
            p_bars: c.p_bars.iter().map(linalg::to_rows).collect(),
            lambda: c.lambda,
            mu: c.mu,
            tau_d: c.tau_d,
            a_star: c.a_star,
            partition: [c.partition.0, c.partition.1, c.partition.2],
            margins: c.margins,
            iterations: c.iterations,
        }
    }
}

impl StabilityCertificate {
    pub fn p_bar(&self, mode: usize) -> &Matrix {
        if self.p_bars.len() == 1 {
            &self.p_bars[0]
        } else {
            &self.p_bars[mode]
        }
    }

    /// The `n×n` (1,1) block of `P̄_p`, used as the adaptation weight `P_p`.
    pub fn adaptation_weight(&self, mode: usize) -> Matrix {
        let n = self.partition.0;
        self.p_bar(mode).view((0, 0), (n, n)).into_owned()
    }

    pub fn adaptation_weights(&self, modes: usize) -> Vec<Matrix> {
        (0..modes).map(|p| self.adaptation_weight(p)).collect()
    }

    /// Whether a schedule with this minimum gap between switches is covered.
    pub fn admits_dwell(&self, dwell: f64) -> bool {
        self.kind == CertificateKind::Common || dwell >= self.tau_d
    }

    /// Recomputes every margin from scratch against the given vertex
    /// matrices (grouped by mode) and fails if any is below
    /// [`VERIFY_TOLERANCE`].
    pub fn verify(&self, by_mode: &[Vec<Matrix>]) -> Result<VerificationMargins> {
        if self.p_bars.len() != 1 && self.p_bars.len() != by_mode.len() {
            return Err(Error::InvalidArgument("certificate and family have different mode counts".into()));
        }
        let margins = compute_margins(self.kind, &self.p_bars, by_mode, self.lambda, self.mu);
        if margins.lower < -1e-12 || margins.lyapunov < VERIFY_TOLERANCE || margins.jump < -1e-9 {
            return Err(Error::NotFound(format!(
                "certificate failed re-verification: lower {:.3e}, lyapunov {:.3e}, jump {:.3e}",
                margins.lower, margins.lyapunov, margins.jump
            )));
        }
        Ok(margins)
    }
}

fn compute_margins(kind: CertificateKind, p_bars: &[Matrix], by_mode: &[Vec<Matrix>], lambda: f64, mu: f64) -> VerificationMargins {
    let pick = |i: usize| if p_bars.len() == 1 { &p_bars[0] } else { &p_bars[i] };
    let lower = p_bars.iter().map(linalg::min_eig_sym).fold(f64::INFINITY, f64::min) - 1.0;
    let mut lyapunov = f64::INFINITY;
    for (i, mats) in by_mode.iter().enumerate() {
        let p = pick(i);
        for a in mats {
            let lhs = a.transpose() * p + p * a;
            let v = match kind {
                CertificateKind::Common => linalg::min_eig_sym(&-lhs) - 1.0,
                CertificateKind::DwellTime => linalg::min_eig_sym(&-(lhs + p * lambda)),
            };
            lyapunov = lyapunov.min(v);
        }
    }
    let scale = p_bars.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    let mut jump: f64 = 0.0;
    if p_bars.len() > 1 {
        jump = f64::INFINITY;
        for pi in p_bars {
            for pj in p_bars {
                jump = jump.min(linalg::min_eig_sym(&(pj * mu - pi)) / scale);
            }
        }
    }
    VerificationMargins { lower, lyapunov, jump }
}

/// Common Lyapunov matrix with `P̄ ≥ 𝕀` and `ĀᵀP̄ + P̄Ā ≤ −𝕀` for every
/// matrix in `a_bars` (all modes and vertices). The decay rate is
/// `λ = min_k λ_min(P̄^{-1/2}(−Ā_kᵀP̄ − P̄Ā_k)P̄^{-1/2})`, with `μ = 1` and
/// `τ_d = 0`.
pub fn find_common_lyapunov(
    a_bars: &[Matrix],
    partition: (usize, usize, usize),
    a_star: f64,
    opts: &LmiOptions,
) -> Result<StabilityCertificate> {
    check_a_star(a_star)?;
    match solve_lyapunov_lmi(a_bars, 0.0, opts) {
        LmiOutcome::Found { p, iterations } => {
            let p_inv_half = linalg::sym_map(&p, |v| 1.0 / v.sqrt());
            let lambda = a_bars
                .iter()
                .map(|a| linalg::min_eig_sym(&(&p_inv_half * -(a.transpose() * &p + &p * a) * &p_inv_half)))
                .fold(f64::INFINITY, f64::min);
            let by_mode = vec![a_bars.to_vec()];
            let mut cert = StabilityCertificate {
                kind: CertificateKind::Common,
                p_bars: vec![p],
                lambda,
                mu: 1.0,
                tau_d: 0.0,
                a_star,
                partition,
                margins: VerificationMargins { lower: 0.0, lyapunov: 0.0, jump: 0.0 },
                iterations,
            };
            cert.margins = cert.verify(&by_mode)?;
            Ok(cert)
        }
        LmiOutcome::NotFound { best_margin, iterations, reason } => Err(Error::NotFound(format!(
            "common Lyapunov matrix not found after {iterations} iterations ({reason}); best normalized margin {best_margin:.3e}. \
             This does not prove infeasibility"
        ))),
    }
}

/// Per-mode matrices with `Ā_iᵀP̄_i + P̄_iĀ_i ≤ −λP̄_i` at every vertex,
/// `μ = max_{i,j} λ_max(P̄_j⁻¹P̄_i)` and `τ_d = ln μ / ((1−a*)λ)`.
pub fn find_dwell_time_family(
    by_mode: &[Vec<Matrix>],
    lambda: f64,
    a_star: f64,
    partition: (usize, usize, usize),
    opts: &LmiOptions,
) -> Result<StabilityCertificate> {
    check_a_star(a_star)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
    }
    let outcomes: Vec<LmiOutcome> = by_mode.par_iter().map(|mats| solve_lyapunov_lmi(mats, lambda, opts)).collect();
    let mut p_bars = Vec::with_capacity(by_mode.len());
    let mut iterations = 0;
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            LmiOutcome::Found { p, iterations: it } => {
                iterations += it;
                p_bars.push(p);
            }
            LmiOutcome::NotFound { best_margin, reason, .. } => {
                return Err(Error::NotFound(format!(
                    "mode {i} has no certificate at λ = {lambda:.6e} ({reason}); best normalized margin {best_margin:.3e}"
                )))
            }
        }
    }
    let mut mu: f64 = 1.0;
    for pi in &p_bars {
        for pj in &p_bars {
            mu = mu.max(linalg::max_generalized_eig(pi, pj)?);
        }
    }
    if mu <= 1.0 + 1e-12 {
        mu = 1.0;
    }
    let tau_d = dwell_time(mu, lambda, a_star)?;
    let mut cert = StabilityCertificate {
        kind: CertificateKind::DwellTime,
        p_bars,
        lambda,
        mu,
        tau_d,
        a_star,
        partition,
        margins: VerificationMargins { lower: 0.0, lyapunov: 0.0, jump: 0.0 },
        iterations,
    };
    cert.margins = cert.verify(by_mode)?;
    Ok(cert)
}

/// Bisects `λ` over `(0, λ_max]` (30 halvings) for the largest rate at
/// which every mode is certified. `λ_max = 2·min_k |α(Ā_k)|` with `α` the
/// spectral abscissa, beyond which `ĀᵀP + PĀ ≤ −λP` is impossible.
pub fn certify_dwell_time(
    by_mode: &[Vec<Matrix>],
    a_star: f64,
    partition: (usize, usize, usize),
    opts: &LmiOptions,
) -> Result<StabilityCertificate> {
    let abscissa = by_mode.iter().flatten().map(linalg::spectral_abscissa).fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::NotFound(format!("a vertex matrix is not Hurwitz (spectral abscissa {abscissa:.4e})")));
    }
    let lambda_max = 2.0 * -abscissa;
    if let Ok(c) = find_dwell_time_family(by_mode, lambda_max, a_star, partition, opts) {
        return Ok(c);
    }
    let (mut lo, mut hi) = (0.0, lambda_max);
    let mut best = None;
    let mut last_err = None;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        match find_dwell_time_family(by_mode, mid, a_star, partition, opts) {
            Ok(c) => {
                lo = mid;
                best = Some(c);
            }
            Err(e) => {
                hi = mid;
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::NotFound("dwell-time search failed".into())))
}

/// `τ_d = ln μ / ((1 − a*) λ)`.
pub fn dwell_time(mu: f64, lambda: f64, a_star: f64) -> Result<f64> {
    check_a_star(a_star)?;
    if !(mu >= 1.0) || !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("need μ ≥ 1 and λ > 0, got μ = {mu}, λ = {lambda}")));
    }
    if mu == 1.0 {
        return Ok(0.0);
    }
    Ok(mu.ln() / ((1.0 - a_star) * lambda))
}

fn check_a_star(a_star: f64) -> Result<()> {
    if !(a_star > 0.0 && a_star < 1.0) {
        return Err(Error::InvalidArgument(format!("a* must lie in (0, 1), got {a_star}")));
    }
    Ok(())
}
