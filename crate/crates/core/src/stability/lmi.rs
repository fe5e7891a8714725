//! Feasibility of `Mᵀ P + P M < 0` for a finite set of matrices and a
//! common `P > 0`, by alternating projections between the PSD cone and the
//! affine image of `P`.
//!
//! Before iterating the problem is whitened with the congruence
//! `P = S P̃ S`, `S = P₀^{1/2}`, where `P₀` averages the individual Lyapunov
//! solutions; in those coordinates `P̃ = 𝕀` is usually close to feasible.

use nalgebra::Cholesky;

use crate::linalg::{self, Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmiOptions {
    pub max_iterations: usize,
    /// Iterations between re-whitening steps.
    pub rewhiten_every: usize,
    /// Eigenvalue margin enforced on both cones during the projections.
    pub eta: f64,
    pub residual_tolerance: f64,
}

impl Default for LmiOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, rewhiten_every: 200, eta: 0.5, residual_tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LmiOutcome {
    /// `P` with `P ≥ 𝕀` and `(M+sI/2)ᵀP + P(M+sI/2) ≤ −𝕀` at every input.
    Found { p: Matrix, iterations: usize },
    /// Budget exhausted; `best_margin` is the best worst-case eigenvalue
    /// margin reached (negative).
    NotFound { best_margin: f64, iterations: usize, reason: String },
}

/// Orthonormal basis for symmetric matrices (the `svec` coordinates).
struct SymBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl SymBasis {
    fn new(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Self { n, pairs }
    }

    fn dim(&self) -> usize {
        self.pairs.len()
    }

    fn to_mat(&self, p: &Vector) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for (v, &(i, j)) in p.iter().zip(&self.pairs) {
            if i == j {
                m[(i, i)] = *v;
            } else {
                m[(i, j)] = v / std::f64::consts::SQRT_2;
                m[(j, i)] = m[(i, j)];
            }
        }
        m
    }

    fn to_vec(&self, m: &Matrix) -> Vector {
        Vector::from_iterator(
            self.dim(),
            self.pairs.iter().map(|&(i, j)| if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) * std::f64::consts::SQRT_2 }),
        )
    }

    /// Matrix of `P ↦ MᵀP + PM` in svec coordinates.
    fn lyapunov_operator(&self, m: &Matrix) -> Matrix {
        let d = self.dim();
        let mut l = Matrix::zeros(d, d);
        for c in 0..d {
            let mut e = Vector::zeros(d);
            e[c] = 1.0;
            let ec = self.to_mat(&e);
            let img = m.transpose() * &ec + &ec * m;
            l.set_column(c, &self.to_vec(&img));
        }
        l
    }
}

/// Worst margin of `P ≥ 0` and `MᵀP + PM ≤ 0` over the inputs:
/// `min(λ_min(P), min_k λ_min(−(M_kᵀP + PM_k)))`.
pub fn worst_margin(p: &Matrix, mats: &[Matrix]) -> f64 {
    mats.iter()
        .map(|m| linalg::min_eig_sym(&-(m.transpose() * p + p * m)))
        .fold(linalg::min_eig_sym(p), f64::min)
}

/// Searches for a common `P` with `(M_k + s𝕀/2)ᵀP + P(M_k + s𝕀/2) < 0` and
/// `P > 0` where `s = shift`, then scales it so both inequalities hold with
/// margin 1. With `shift = λ` this is `M_kᵀP + PM_k ≤ −λP`.
pub fn solve_lyapunov_lmi(mats: &[Matrix], shift: f64, opts: &LmiOptions) -> LmiOutcome {
    if mats.is_empty() {
        return LmiOutcome::NotFound { best_margin: f64::NEG_INFINITY, iterations: 0, reason: "no constraints".into() };
    }
    let n = mats[0].nrows();
    let shifted: Vec<Matrix> = mats.iter().map(|m| m + Matrix::identity(n, n) * (0.5 * shift)).collect();
    // each shifted matrix must be Hurwitz for any P to exist
    let mut p0 = Matrix::zeros(n, n);
    for m in &shifted {
        match linalg::lyapunov(m, &Matrix::identity(n, n)) {
            Ok(p) if linalg::is_hurwitz(m) => p0 += &p / p.trace(),
            _ => {
                return LmiOutcome::NotFound {
                    best_margin: -linalg::spectral_abscissa(m).max(0.0),
                    iterations: 0,
                    reason: format!("a constraint matrix has spectral abscissa {:.4e} ≥ 0", linalg::spectral_abscissa(m)),
                }
            }
        }
    }

    let basis = SymBasis::new(n);
    let mut center = linalg::symmetrize(&p0);
    let mut best_margin = f64::NEG_INFINITY;
    let mut used = 0;
    while used < opts.max_iterations {
        let s_half = linalg::sym_map(&center, f64::sqrt);
        let s_inv_half = linalg::sym_map(&center, |v| 1.0 / v.sqrt());
        let whitened: Vec<Matrix> = shifted.iter().map(|m| &s_half * m * &s_inv_half).collect();
        let ops: Vec<Matrix> = whitened.iter().map(|m| basis.lyapunov_operator(m)).collect();
        let mut h = Matrix::identity(basis.dim(), basis.dim());
        for l in &ops {
            h += l.transpose() * l;
        }
        let chol = Cholesky::new(h).expect("𝕀 + ΣLᵀL is positive definite");
        let mut p = basis.to_vec(&Matrix::identity(n, n));
        let mut clipped = basis.to_mat(&p);
        let budget = opts.rewhiten_every.min(opts.max_iterations - used);
        for _ in 0..budget {
            used += 1;
            let pm = basis.to_mat(&p);
            let images: Vec<Matrix> = ops.iter().map(|l| basis.to_mat(&(l * &p))).collect();
            let margin = images.iter().map(|s| -linalg::max_eig_sym(s)).fold(linalg::min_eig_sym(&pm), f64::min);
            let scale = pm.amax().max(f64::MIN_POSITIVE);
            best_margin = best_margin.max(margin / scale);
            if margin > opts.residual_tolerance * scale {
                let p_out = &s_half * pm * &s_half;
                return finish(p_out, &shifted, used);
            }
            clipped = linalg::clip_below(&pm, opts.eta);
            let mut rhs = basis.to_vec(&clipped);
            for (l, s) in ops.iter().zip(&images) {
                rhs += l.transpose() * basis.to_vec(&linalg::clip_above(s, -opts.eta));
            }
            p = chol.solve(&rhs);
        }
        center = linalg::symmetrize(&(&s_half * clipped * &s_half));
    }
    LmiOutcome::NotFound {
        best_margin,
        iterations: used,
        reason: format!("iteration budget of {} exhausted", opts.max_iterations),
    }
}

fn finish(p: Matrix, shifted: &[Matrix], iterations: usize) -> LmiOutcome {
    let p = linalg::symmetrize(&p);
    let worst_lyap = shifted
        .iter()
        .map(|m| linalg::min_eig_sym(&-(m.transpose() * &p + &p * m)))
        .fold(f64::INFINITY, f64::min);
    let s = (1.0 / linalg::min_eig_sym(&p)).max(1.0 / worst_lyap) * (1.0 + 1e-3);
    LmiOutcome::Found { p: p * s, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(v))
    }

    #[test]
    fn svec_round_trip_and_isometry() {
        let b = SymBasis::new(3);
        let m = linalg::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 5.0, 6.0], vec![3.0, 6.0, 9.0]]).unwrap();
        let v = b.to_vec(&m);
        assert!((b.to_mat(&v) - &m).amax() < 1e-15);
        assert!((v.norm() - m.norm()).abs() < 1e-12);
    }

    #[test]
    fn scalar_stable_system() {
        match solve_lyapunov_lmi(&[-Matrix::identity(2, 2)], 0.0, &LmiOptions::default()) {
            LmiOutcome::Found { p, .. } => {
                assert!(linalg::min_eig_sym(&p) >= 1.0);
                assert!(worst_margin(&p, &[-Matrix::identity(2, 2)]) >= 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_diagonal_systems_share_a_certificate() {
        let mats = [diag(&[-1.0, -2.0]), diag(&[-2.0, -1.0])];
        match solve_lyapunov_lmi(&mats, 0.0, &LmiOptions::default()) {
            LmiOutcome::Found { p, .. } => assert!(worst_margin(&p, &mats) > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shift_beyond_decay_rate_is_infeasible() {
        // ẋ = −x admits MᵀP + PM ≤ −λP only for λ < 2
        let mats = [-Matrix::identity(1, 1)];
        assert!(matches!(solve_lyapunov_lmi(&mats, 1.9, &LmiOptions::default()), LmiOutcome::Found { .. }));
        assert!(matches!(solve_lyapunov_lmi(&mats, 2.1, &LmiOptions::default()), LmiOutcome::NotFound { .. }));
    }

    #[test]
    fn unstable_input_not_found() {
        let out = solve_lyapunov_lmi(&[Matrix::identity(2, 2)], 0.0, &LmiOptions::default());
        assert!(matches!(out, LmiOutcome::NotFound { iterations: 0, .. }));
    }

    #[test]
    fn switching_pair_without_common_certificate() {
        // A1·A2 has negative real eigenvalues, which rules out a common
        // quadratic Lyapunov function for 2×2 pairs
        let a1 = linalg::from_rows(&[vec![-0.1, 1.0], vec![-10.0, -0.1]]).unwrap();
        let a2 = linalg::from_rows(&[vec![-0.1, 10.0], vec![-1.0, -0.1]]).unwrap();
        let prod = &a1 * &a2;
        let (tr, det) = (prod.trace(), prod.determinant());
        assert!(tr < 0.0 && det > 0.0 && tr * tr - 4.0 * det > 0.0);
        let opts = LmiOptions { max_iterations: 1000, ..Default::default() };
        assert!(matches!(solve_lyapunov_lmi(&[a1, a2], 0.0, &opts), LmiOutcome::NotFound { .. }));
    }
}
