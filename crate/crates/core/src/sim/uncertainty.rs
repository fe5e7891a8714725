//! Uncertainty boxes and concrete parameter realizations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

const BOX_TOL: f64 = 1e-12;

/// Entrywise interval bounds on `θ` (n×m), `σ` (m) and `ω` (m×m), plus the
/// derivative bounds `d_θ`, `d_σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyBounds {
    theta_lower: Matrix,
    theta_upper: Matrix,
    sigma_lower: Vector,
    sigma_upper: Vector,
    omega_lower: Matrix,
    omega_upper: Matrix,
    d_theta: f64,
    d_sigma: f64,
}

impl UncertaintyBounds {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta_lower: Matrix,
        theta_upper: Matrix,
        sigma_lower: Vector,
        sigma_upper: Vector,
        omega_lower: Matrix,
        omega_upper: Matrix,
        d_theta: f64,
        d_sigma: f64,
    ) -> Result<Self> {
        let n = theta_lower.nrows();
        let m = theta_lower.ncols();
        if theta_upper.shape() != (n, m)
            || sigma_lower.len() != m
            || sigma_upper.len() != m
            || omega_lower.shape() != (m, m)
            || omega_upper.shape() != (m, m)
        {
            return Err(Error::Dimension("uncertainty boxes have inconsistent shapes".into()));
        }
        let ordered = |lo: &Matrix, hi: &Matrix| lo.iter().zip(hi.iter()).all(|(l, h)| l <= h);
        if !ordered(&theta_lower, &theta_upper)
            || !sigma_lower.iter().zip(sigma_upper.iter()).all(|(l, h)| l <= h)
            || !ordered(&omega_lower, &omega_upper)
        {
            return Err(Error::InvalidArgument("box lower bound exceeds upper bound".into()));
        }
        let contains_zero = |lo: &Matrix, hi: &Matrix| lo.iter().zip(hi.iter()).all(|(l, h)| *l <= 0.0 && 0.0 <= *h);
        if !contains_zero(&theta_lower, &theta_upper) {
            return Err(Error::InvalidArgument("theta box must contain 0".into()));
        }
        if !sigma_lower.iter().zip(sigma_upper.iter()).all(|(l, h)| *l <= 0.0 && 0.0 <= *h) {
            return Err(Error::InvalidArgument("sigma box must contain 0".into()));
        }
        let eye = Matrix::identity(m, m);
        if !(0..m * m).all(|k| omega_lower[k] <= eye[k] && eye[k] <= omega_upper[k]) {
            return Err(Error::InvalidArgument("omega box must contain the identity".into()));
        }
        if !(d_theta >= 0.0 && d_sigma >= 0.0) {
            return Err(Error::InvalidArgument("derivative bounds must be nonnegative".into()));
        }
        Ok(Self { theta_lower, theta_upper, sigma_lower, sigma_upper, omega_lower, omega_upper, d_theta, d_sigma })
    }

    /// Symmetric boxes `|θ_ij| ≤ theta`, `|σ_i| ≤ sigma`, and `ω` with the
    /// diagonal in `omega_range` and zero off-diagonal entries.
    pub fn symmetric(n: usize, m: usize, theta: f64, sigma: f64, omega_range: (f64, f64)) -> Result<Self> {
        let mut omega_lower = Matrix::zeros(m, m);
        let mut omega_upper = Matrix::zeros(m, m);
        for i in 0..m {
            omega_lower[(i, i)] = omega_range.0;
            omega_upper[(i, i)] = omega_range.1;
        }
        Self::new(
            Matrix::from_element(n, m, -theta),
            Matrix::from_element(n, m, theta),
            Vector::from_element(m, -sigma),
            Vector::from_element(m, sigma),
            omega_lower,
            omega_upper,
            0.0,
            0.0,
        )
    }

    /// Degenerate boxes: θ = 0, σ = 0, ω = 𝕀.
    pub fn zero(n: usize, m: usize) -> Self {
        Self::symmetric(n, m, 0.0, 0.0, (1.0, 1.0)).expect("zero box is well formed")
    }

    pub fn n(&self) -> usize {
        self.theta_lower.nrows()
    }

    pub fn m(&self) -> usize {
        self.theta_lower.ncols()
    }

    pub fn theta_range(&self) -> (&Matrix, &Matrix) {
        (&self.theta_lower, &self.theta_upper)
    }

    pub fn sigma_range(&self) -> (&Vector, &Vector) {
        (&self.sigma_lower, &self.sigma_upper)
    }

    pub fn omega_range(&self) -> (&Matrix, &Matrix) {
        (&self.omega_lower, &self.omega_upper)
    }

    pub fn d_theta(&self) -> f64 {
        self.d_theta
    }

    pub fn d_sigma(&self) -> f64 {
        self.d_sigma
    }

    /// Corners of the θ box; degenerate intervals contribute one value.
    pub fn theta_vertices(&self) -> Vec<Matrix> {
        box_vertices(&self.theta_lower, &self.theta_upper)
    }

    pub fn omega_vertices(&self) -> Vec<Matrix> {
        box_vertices(&self.omega_lower, &self.omega_upper)
    }

    /// `D_θ = max ‖θ‖₂` over the box (attained at a vertex by convexity).
    pub fn d_theta_max(&self) -> f64 {
        self.theta_vertices().iter().map(linalg::norm2).fold(0.0, f64::max)
    }

    /// `D_σ = max ‖σ‖` over the box.
    pub fn d_sigma_max(&self) -> f64 {
        self.sigma_lower
            .iter()
            .zip(self.sigma_upper.iter())
            .map(|(l, h)| l.abs().max(h.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `D_ω = max |trace(ω − 𝕀)|` over the box.
    pub fn d_omega_max(&self) -> f64 {
        let m = self.m();
        let lo: f64 = (0..m).map(|i| self.omega_lower[(i, i)] - 1.0).sum();
        let hi: f64 = (0..m).map(|i| self.omega_upper[(i, i)] - 1.0).sum();
        lo.abs().max(hi.abs())
    }

    /// Radius of the smallest origin-centred ball containing column `j` of
    /// the θ box.
    pub fn theta_column_radius(&self, j: usize) -> f64 {
        column_radius(&self.theta_lower, &self.theta_upper, j)
    }

    pub fn omega_column_radius(&self, j: usize) -> f64 {
        column_radius(&self.omega_lower, &self.omega_upper, j)
    }

    pub fn contains_theta(&self, theta: &Matrix) -> bool {
        in_box(theta.as_slice(), self.theta_lower.as_slice(), self.theta_upper.as_slice())
    }

    pub fn contains_sigma(&self, sigma: &Vector) -> bool {
        in_box(sigma.as_slice(), self.sigma_lower.as_slice(), self.sigma_upper.as_slice())
    }

    pub fn contains_omega(&self, omega: &Matrix) -> bool {
        in_box(omega.as_slice(), self.omega_lower.as_slice(), self.omega_upper.as_slice())
    }
}

fn in_box(v: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    v.len() == lo.len() && v.iter().zip(lo).zip(hi).all(|((x, l), h)| *x >= l - BOX_TOL && *x <= h + BOX_TOL)
}

fn column_radius(lo: &Matrix, hi: &Matrix, j: usize) -> f64 {
    (0..lo.nrows())
        .map(|i| lo[(i, j)].abs().max(hi[(i, j)].abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn box_vertices(lo: &Matrix, hi: &Matrix) -> Vec<Matrix> {
    let free: Vec<usize> = (0..lo.len()).filter(|&k| lo[k] < hi[k]).collect();
    let count = 1usize << free.len();
    (0..count)
        .map(|mask| {
            let mut v = lo.clone();
            for (bit, &k) in free.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    v[k] = hi[k];
                }
            }
            v
        })
        .collect()
}

/// `offset + amplitude·sin(frequency·t)` for one scalar parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub offset: f64,
    pub amplitude: f64,
    /// rad/s
    pub frequency: f64,
}

impl Sinusoid {
    pub fn constant(value: f64) -> Self {
        Self { offset: value, amplitude: 0.0, frequency: 0.0 }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            self.offset
        } else {
            self.offset + self.amplitude * (self.frequency * t).sin()
        }
    }

    /// Peak of the time derivative, `|amplitude·frequency|`.
    pub fn rate_bound(&self) -> f64 {
        (self.amplitude * self.frequency).abs()
    }
}

/// Matrix-valued parameter trajectory, one [`Sinusoid`] per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTrajectory {
    rows: usize,
    cols: usize,
    entries: Vec<Sinusoid>,
    constant: Option<Matrix>,
}

impl MatrixTrajectory {
    pub fn constant(value: Matrix) -> Self {
        let entries = value.iter().map(|&v| Sinusoid::constant(v)).collect();
        Self { rows: value.nrows(), cols: value.ncols(), entries, constant: Some(value) }
    }

    /// Entries in column-major order.
    pub fn sinusoidal(rows: usize, cols: usize, entries: Vec<Sinusoid>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!("expected {} trajectory entries, got {}", rows * cols, entries.len())));
        }
        let constant = entries
            .iter()
            .all(|e| e.amplitude == 0.0)
            .then(|| Matrix::from_iterator(rows, cols, entries.iter().map(|e| e.offset)));
        Ok(Self { rows, cols, entries, constant })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[Sinusoid] {
        &self.entries
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn value_at(&self, t: f64) -> Matrix {
        match &self.constant {
            Some(c) => c.clone(),
            None => Matrix::from_iterator(self.rows, self.cols, self.entries.iter().map(|e| e.value_at(t))),
        }
    }

    /// Frobenius norm of the entrywise rate bounds; dominates `‖d/dt value‖₂`.
    pub fn rate_bound(&self) -> f64 {
        self.entries.iter().map(|e| e.rate_bound().powi(2)).sum::<f64>().sqrt()
    }

    /// Entrywise envelope `offset ± |amplitude|`.
    pub fn envelope(&self) -> (Matrix, Matrix) {
        let lo = Matrix::from_iterator(self.rows, self.cols, self.entries.iter().map(|e| e.offset - e.amplitude.abs()));
        let hi = Matrix::from_iterator(self.rows, self.cols, self.entries.iter().map(|e| e.offset + e.amplitude.abs()));
        (lo, hi)
    }
}

/// True parameters for one mode: constant `ω`, trajectories `θ(t)`, `σ(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUncertainty {
    pub omega: Matrix,
    pub theta: MatrixTrajectory,
    /// m×1
    pub sigma: MatrixTrajectory,
}

impl ModeUncertainty {
    pub fn constant(omega: Matrix, theta: Matrix, sigma: Vector) -> Self {
        let m = sigma.len();
        Self {
            omega,
            theta: MatrixTrajectory::constant(theta),
            sigma: MatrixTrajectory::constant(Matrix::from_column_slice(m, 1, sigma.as_slice())),
        }
    }

    pub fn theta_at(&self, t: f64) -> Matrix {
        self.theta.value_at(t)
    }

    pub fn sigma_at(&self, t: f64) -> Vector {
        let s = self.sigma.value_at(t);
        Vector::from_column_slice(s.as_slice())
    }
}

/// Realization of the uncertainty: either one entry shared by every mode,
/// or one entry per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyRealization {
    modes: Vec<ModeUncertainty>,
}

impl UncertaintyRealization {
    pub fn uniform(mode: ModeUncertainty) -> Self {
        Self { modes: vec![mode] }
    }

    pub fn per_mode(modes: Vec<ModeUncertainty>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument("empty per-mode realization".into()));
        }
        Ok(Self { modes })
    }

    /// ω = 𝕀, θ ≡ 0, σ ≡ 0.
    pub fn nominal(n: usize, m: usize) -> Self {
        Self::uniform(ModeUncertainty::constant(Matrix::identity(m, m), Matrix::zeros(n, m), Vector::zeros(m)))
    }

    pub fn for_mode(&self, p: usize) -> &ModeUncertainty {
        if self.modes.len() == 1 {
            &self.modes[0]
        } else {
            &self.modes[p]
        }
    }

    pub fn modes(&self) -> &[ModeUncertainty] {
        &self.modes
    }

    /// Checks shapes, box containment of every trajectory envelope and the
    /// analytic derivative bounds.
    pub fn validate(&self, bounds: &UncertaintyBounds, family_len: usize) -> Result<()> {
        if self.modes.len() != 1 && self.modes.len() != family_len {
            return Err(Error::InvalidArgument(format!(
                "realization has {} entries for {family_len} modes",
                self.modes.len()
            )));
        }
        let (n, m) = (bounds.n(), bounds.m());
        for (p, mu) in self.modes.iter().enumerate() {
            if mu.omega.shape() != (m, m) || mu.theta.shape() != (n, m) || mu.sigma.shape() != (m, 1) {
                return Err(Error::Dimension(format!("realization entry {p} has wrong shapes")));
            }
            if !bounds.contains_omega(&mu.omega) {
                return Err(Error::InvalidArgument(format!("realization entry {p}: omega outside its box")));
            }
            let (lo, hi) = mu.theta.envelope();
            if !bounds.contains_theta(&lo) || !bounds.contains_theta(&hi) {
                return Err(Error::InvalidArgument(format!("realization entry {p}: theta leaves its box")));
            }
            let (lo, hi) = mu.sigma.envelope();
            let (lo, hi) = (Vector::from_column_slice(lo.as_slice()), Vector::from_column_slice(hi.as_slice()));
            if !bounds.contains_sigma(&lo) || !bounds.contains_sigma(&hi) {
                return Err(Error::InvalidArgument(format!("realization entry {p}: sigma leaves its box")));
            }
            if mu.theta.rate_bound() > bounds.d_theta() + BOX_TOL {
                return Err(Error::InvalidArgument(format!("realization entry {p}: theta rate exceeds d_theta")));
            }
            if mu.sigma.rate_bound() > bounds.d_sigma() + BOX_TOL {
                return Err(Error::InvalidArgument(format!("realization entry {p}: sigma rate exceeds d_sigma")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design_bounds() -> UncertaintyBounds {
        UncertaintyBounds::symmetric(2, 1, 50.0, 20.0, (0.5, 1.5)).unwrap()
    }

    #[test]
    fn derived_constants_for_design_boxes() {
        let b = design_bounds();
        assert_relative_eq!(b.d_theta_max(), 5000f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(b.d_sigma_max(), 20.0);
        assert_relative_eq!(b.d_omega_max(), 0.5);
        assert_eq!(b.theta_vertices().len(), 4);
        assert_eq!(b.omega_vertices().len(), 2);
    }

    #[test]
    fn degenerate_box_has_one_vertex() {
        let b = UncertaintyBounds::zero(2, 1);
        assert_eq!(b.theta_vertices().len(), 1);
        assert_eq!(b.omega_vertices().len(), 1);
        assert_eq!(b.d_theta_max(), 0.0);
        assert_eq!(b.d_omega_max(), 0.0);
    }

    #[test]
    fn boxes_must_contain_nominal_point() {
        let r = UncertaintyBounds::symmetric(1, 1, 1.0, 1.0, (1.1, 2.0));
        assert!(r.is_err());
        let r = UncertaintyBounds::new(
            Matrix::from_element(1, 1, 0.5),
            Matrix::from_element(1, 1, 1.0),
            Vector::zeros(1),
            Vector::zeros(1),
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            0.0,
            0.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn realization_must_respect_boxes_and_rates() {
        let b = design_bounds();
        let ok = UncertaintyRealization::uniform(ModeUncertainty::constant(
            Matrix::from_element(1, 1, 1.2),
            Matrix::from_element(2, 1, -40.0),
            Vector::from_element(1, 1.0),
        ));
        assert!(ok.validate(&b, 6).is_ok());
        let bad = UncertaintyRealization::uniform(ModeUncertainty::constant(
            Matrix::from_element(1, 1, 1.2),
            Matrix::from_element(2, 1, -60.0),
            Vector::from_element(1, 1.0),
        ));
        assert!(bad.validate(&b, 6).is_err());
        let wavy = ModeUncertainty {
            omega: Matrix::identity(1, 1),
            theta: MatrixTrajectory::constant(Matrix::zeros(2, 1)),
            sigma: MatrixTrajectory::sinusoidal(1, 1, vec![Sinusoid { offset: 0.0, amplitude: 2.0, frequency: 1.0 }])
                .unwrap(),
        };
        // rate 2 exceeds d_sigma = 0
        assert!(UncertaintyRealization::uniform(wavy).validate(&b, 1).is_err());
    }

    #[test]
    fn sinusoid_trajectory_values() {
        let tr = MatrixTrajectory::sinusoidal(1, 1, vec![Sinusoid { offset: 1.0, amplitude: 0.5, frequency: 2.0 }])
            .unwrap();
        assert_relative_eq!(tr.value_at(0.0)[0], 1.0);
        assert_relative_eq!(tr.value_at(std::f64::consts::PI / 4.0)[0], 1.5, epsilon = 1e-12);
        assert_relative_eq!(tr.rate_bound(), 1.0);
    }
}
