use serde::{Deserialize, Serialize};

use crate::controller::filter::FilterSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::reference::augmented::{build_error_blocks, ErrorDynamicsBlocks};
use crate::sim::system::LtiSubsystem;
use crate::sim::uncertainty::UncertaintyBounds;
use crate::stability::certificate::StabilityCertificate;

/// Default `a` in `(0, a*)` for the tracking bound.
pub const DEFAULT_A: f64 = 0.25;

/// Largest exponent tried in the `ν ∈ {10⁰, 10¹, …}` sweep.
const NU_MAX_EXPONENT: i32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceBounds {
    pub beta: f64,
    pub gamma: f64,
    /// `√(β/Γ)`, bound on `‖x̃‖`.
    pub prediction_bound: f64,
    pub nu: f64,
    pub g: f64,
    pub a: f64,
    /// Right-hand side bounding `‖[ē; √ν w]‖²`; proportional to `β/Γ`.
    pub squared_error_bound: f64,
    /// Bound on `‖x_ref − x‖`, the square root of the above.
    pub tracking_bound_state: f64,
    /// Bound on `‖u_ref − u‖`.
    pub tracking_bound_input: f64,
}

/// `Q = S − RᵀP⁻¹R` for `P̄ = [[P, R], [Rᵀ, S]]` with `P` the leading
/// `n×n` block.
pub fn schur_complement_q(p_bar: &Matrix, n: usize) -> Result<Matrix> {
    let d = p_bar.nrows();
    if p_bar.ncols() != d || n > d {
        return Err(Error::Dimension(format!("cannot split a {d}×{} matrix at {n}", p_bar.ncols())));
    }
    let p = p_bar.view((0, 0), (n, n)).into_owned();
    let r = p_bar.view((0, n), (n, d - n)).into_owned();
    let s = p_bar.view((n, n), (d - n, d - n)).into_owned();
    if n == 0 {
        return Ok(s);
    }
    let chol = p.cholesky().ok_or_else(|| Error::Singular {
        mode: "-".into(),
        what: "leading block of P̄ is not positive definite".into(),
    })?;
    Ok(linalg::symmetrize(&(s - r.transpose() * chol.solve(&r))))
}

/// `β = 4(D_θ² + D_σ² + D_ω²) + 4λ⁻¹(D_θ d_θ + D_σ d_σ)`.
pub fn beta_xtilde(bounds: &UncertaintyBounds, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
    }
    let (dt, ds, dw) = (bounds.d_theta_max(), bounds.d_sigma_max(), bounds.d_omega_max());
    Ok(4.0 * (dt * dt + ds * ds + dw * dw) + 4.0 / lambda * (dt * bounds.d_theta() + ds * bounds.d_sigma()))
}

/// `√(β/Γ)`.
pub fn prediction_error_bound(beta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("Γ must be positive, got {gamma}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("β must be nonnegative, got {beta}")));
    }
    Ok((beta / gamma).sqrt())
}

/// `(1 − μ^{−(1−a)/(1−a*)}) / (1 − μ^{(a−a*)/(1−a*)})`, replaced by its
/// limit `(1−a)/(a*−a)` at `μ = 1`.
pub fn switching_ratio(mu: f64, a: f64, a_star: f64) -> Result<f64> {
    if !(a > 0.0 && a < a_star && a_star < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < a < a* < 1, got a = {a}, a* = {a_star}")));
    }
    if !(mu >= 1.0) {
        return Err(Error::InvalidArgument(format!("μ must be at least 1, got {mu}")));
    }
    let k = 1.0 - a_star;
    if mu == 1.0 {
        return Ok((1.0 - a) / (a_star - a));
    }
    let l = mu.ln();
    // expm1 keeps the ratio accurate as μ → 1
    Ok((-(-(1.0 - a) / k * l).exp_m1()) / (-((a - a_star) / k * l).exp_m1()))
}

/// Performance bounds from a certificate: picks `ν`, evaluates `g` over
/// every mode and `ω` vertex, and returns the squared error bound
/// `μg/((1−a)λ) · ratio(μ) · β/Γ` together with the induced state and
/// input bounds.
pub fn tracking_error_bound(
    cert: &StabilityCertificate,
    family: &[LtiSubsystem],
    filter: &FilterSpec,
    omegas: &[Matrix],
    beta: f64,
    gamma: f64,
    a: f64,
) -> Result<PerformanceBounds> {
    let prediction_bound = prediction_error_bound(beta, gamma)?;
    let ratio = switching_ratio(cert.mu, a, cert.a_star)?;
    let (lambda, n) = (cert.lambda, cert.partition.0);
    let mut cases = Vec::new();
    for (p, sys) in family.iter().enumerate() {
        let p_bar = cert.p_bar(p);
        let q = schur_complement_q(p_bar, n)?;
        for w in omegas {
            cases.push((p_bar, q.clone(), build_error_blocks(sys, filter, w)?));
        }
    }
    let nu = select_nu(&cases, lambda, a)?;
    let mut g: f64 = 0.0;
    let mut du: f64 = 0.0;
    for (p_bar, q, blk) in &cases {
        g = g.max(g_constant(p_bar, q, blk, lambda, a, nu)?);
        du = du.max(linalg::norm2(&blk.du_bar));
    }
    let squared = cert.mu * g / ((1.0 - a) * lambda) * ratio * beta / gamma;
    let state = squared.sqrt();
    Ok(PerformanceBounds {
        beta,
        gamma,
        prediction_bound,
        nu,
        g,
        a,
        squared_error_bound: squared,
        tracking_bound_state: state,
        tracking_bound_input: state * (1.0 + 1.0 / nu).sqrt() + du * prediction_bound,
    })
}

/// Smallest `ν = 10^k` with `−λaP̄ + (νλa)⁻¹ P̄H̄Q⁻¹H̄ᵀP̄ < 0` in every case.
fn select_nu(cases: &[(&Matrix, Matrix, ErrorDynamicsBlocks)], lambda: f64, a: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=NU_MAX_EXPONENT {
        let nu = 10f64.powi(k);
        worst = f64::NEG_INFINITY;
        for (p_bar, q, blk) in cases {
            let ph = *p_bar * &blk.h_bar;
            let q_inv_ht = q.clone().cholesky().expect("Q is positive definite").solve(&ph.transpose());
            let lhs = *p_bar * (-lambda * a) + &ph * q_inv_ht / (nu * lambda * a);
            worst = worst.max(linalg::max_eig_sym(&lhs) / p_bar.amax());
        }
        if worst < -1e-12 {
            return Ok(nu);
        }
    }
    Err(Error::NotFound(format!("no ν ≤ 1e{NU_MAX_EXPONENT} satisfies the coupling inequality (worst {worst:.3e})")))
}

fn g_constant(p_bar: &Matrix, q: &Matrix, blk: &ErrorDynamicsBlocks, lambda: f64, a: f64, nu: f64) -> Result<f64> {
    let (d, w) = (p_bar.nrows(), q.nrows());
    let ph = p_bar * &blk.h_bar;
    let tl = p_bar * (-lambda * a);
    let br = q * (-nu * lambda * a);
    let pht = ph.transpose();
    let psi = linalg::blocks(&[d, w], &[d, w], &[&[Some(&tl), Some(&ph)], &[Some(&pht), Some(&br)]]);
    let top = p_bar * &blk.j_bar;
    let bot = q * &blk.g_bar * nu;
    let v = linalg::blocks(&[d, w], &[blk.j_bar.ncols()], &[&[Some(&top)], &[Some(&bot)]]);
    let x = psi.lu().solve(&v).ok_or_else(|| Error::Singular {
        mode: "-".into(),
        what: "square-completion matrix is singular".into(),
    })?;
    Ok(linalg::norm2(&(v.transpose() * x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schur_of_identity_and_scalar_case() {
        let q = schur_complement_q(&Matrix::identity(3, 3), 2).unwrap();
        assert_eq!(q, Matrix::identity(1, 1));
        let p = linalg::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_relative_eq!(schur_complement_q(&p, 1).unwrap()[(0, 0)], 1.5, epsilon = 1e-15);
        let bad = linalg::from_rows(&[vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(schur_complement_q(&bad, 1).is_err());
    }

    #[test]
    fn beta_for_design_boxes() {
        let b = UncertaintyBounds::symmetric(2, 1, 50.0, 20.0, (0.5, 1.5)).unwrap();
        assert_relative_eq!(beta_xtilde(&b, 1.0).unwrap(), 21601.0, epsilon = 1e-9);
        assert_eq!(beta_xtilde(&UncertaintyBounds::zero(2, 1), 1.0).unwrap(), 0.0);
        assert!(beta_xtilde(&b, 0.0).is_err());
    }

    #[test]
    fn derivative_term_scales_with_inverse_lambda() {
        let lo = Matrix::from_element(1, 1, -1.0);
        let hi = Matrix::from_element(1, 1, 1.0);
        let z = crate::linalg::Vector::zeros(1);
        let b = UncertaintyBounds::new(lo, hi, z.clone(), z, Matrix::identity(1, 1), Matrix::identity(1, 1), 2.0, 0.0)
            .unwrap();
        let base = 4.0 * b.d_theta_max().powi(2);
        let t1 = beta_xtilde(&b, 1.0).unwrap() - base;
        let t2 = beta_xtilde(&b, 2.0).unwrap() - base;
        assert_relative_eq!(t2, 0.5 * t1, epsilon = 1e-14);
    }

    #[test]
    fn prediction_bound_arithmetic() {
        assert_relative_eq!(prediction_error_bound(21601.0, 1e4).unwrap(), 1.469_727_866, epsilon = 1e-9);
        let b1 = prediction_error_bound(21601.0, 1e4).unwrap();
        let b4 = prediction_error_bound(21601.0, 4e4).unwrap();
        assert_relative_eq!(b4, 0.5 * b1, epsilon = 1e-15);
        assert_eq!(prediction_error_bound(0.0, 3.0).unwrap(), 0.0);
        assert!(prediction_error_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn switching_ratio_limit() {
        let (a, s) = (0.25, 0.5);
        let lim = switching_ratio(1.0, a, s).unwrap();
        assert_relative_eq!(lim, 3.0, epsilon = 1e-15);
        let near = switching_ratio(1.0 + 1e-8, a, s).unwrap();
        assert!((near - lim).abs() <= 1e-6);
        assert!(switching_ratio(2.0, a, s).unwrap().is_finite());
        assert!(switching_ratio(1.0, 0.5, 0.5).is_err());
    }
}
