use serde::{Deserialize, Serialize};

use crate::controller::filter::FilterSpec;
use crate::controller::projection::{project_columns, projection, ProjectionConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::sim::system::{dc_feedforward_gain, LtiSubsystem};
use crate::sim::uncertainty::UncertaintyBounds;

/// Projection sets for the three estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionSet {
    /// One per column of θ̂.
    pub theta: Vec<ProjectionConfig>,
    pub sigma: ProjectionConfig,
    /// One per column of ω̂.
    pub omega: Vec<ProjectionConfig>,
}

/// Floor used for the radius of a degenerate (single point at zero) box.
const MIN_RADIUS: f64 = 1e-3;

impl ProjectionSet {
    /// Balls centred at the origin that circumscribe the uncertainty boxes,
    /// enlarged by `inflation` so the true parameters stay interior.
    pub fn circumscribing(bounds: &UncertaintyBounds, inflation: f64, epsilon: f64) -> Result<Self> {
        let m = bounds.m();
        let radius = |r: f64| (inflation * r).max(MIN_RADIUS);
        let theta = (0..m)
            .map(|j| ProjectionConfig::new(radius(bounds.theta_column_radius(j)), epsilon))
            .collect::<Result<Vec<_>>>()?;
        let sigma = ProjectionConfig::new(radius(bounds.d_sigma_max()), epsilon)?;
        let omega = (0..m)
            .map(|j| ProjectionConfig::new(radius(bounds.omega_column_radius(j)), epsilon))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { theta, sigma, omega })
    }

    /// Default radii: 10% larger than the circumscribed balls, ε = 0.1.
    pub fn for_bounds(bounds: &UncertaintyBounds) -> Result<Self> {
        Self::circumscribing(bounds, 1.1, 0.1)
    }
}

/// How the reference scaling gain `k_p` is chosen per mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedforwardMode {
    /// `k_p = −(C_p A_p⁻¹ B_p)⁻¹`.
    DcGain,
    /// `k_p = 𝕀`: the command is applied directly as an input.
    Identity,
    /// Same explicit matrix for every mode (row-major).
    Explicit(Vec<Vec<f64>>),
}

impl FeedforwardMode {
    pub fn resolve(&self, family: &[LtiSubsystem]) -> Result<Vec<Matrix>> {
        family
            .iter()
            .map(|sys| match self {
                FeedforwardMode::DcGain => dc_feedforward_gain(sys),
                FeedforwardMode::Identity => Ok(Matrix::identity(sys.m(), sys.m())),
                FeedforwardMode::Explicit(rows) => {
                    let k = linalg::from_rows(rows)?;
                    if k.shape() != (sys.m(), sys.m()) {
                        return Err(Error::Dimension(format!("explicit k_p must be {0}x{0}", sys.m())));
                    }
                    Ok(k)
                }
            })
            .collect()
    }
}

/// Everything the adaptive law and control law need besides the state.
#[derive(Clone, Debug)]
pub struct ControllerConfig {
    filter: FilterSpec,
    gamma: f64,
    kp: Vec<Matrix>,
    p: Vec<Matrix>,
    projections: ProjectionSet,
}

impl ControllerConfig {
    /// `kp` and `p` are per mode; each `P_p` must be symmetric positive
    /// definite.
    pub fn new(filter: FilterSpec, gamma: f64, kp: Vec<Matrix>, p: Vec<Matrix>, projections: ProjectionSet) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("adaptation gain must be positive, got {gamma}")));
        }
        if kp.is_empty() || kp.len() != p.len() {
            return Err(Error::InvalidArgument("need one k_p and one P per mode".into()));
        }
        let m = filter.m();
        for (i, (k, pm)) in kp.iter().zip(&p).enumerate() {
            if k.shape() != (m, m) {
                return Err(Error::Dimension(format!("k_p for mode {i} must be {m}x{m}")));
            }
            let asym = (pm - pm.transpose()).amax();
            if asym > 1e-9 * pm.amax().max(1.0) || linalg::min_eig_sym(pm) <= 0.0 {
                return Err(Error::InvalidArgument(format!("P for mode {i} is not symmetric positive definite")));
            }
        }
        if projections.theta.len() != m || projections.omega.len() != m {
            return Err(Error::Dimension("projection sets must have one entry per input column".into()));
        }
        Ok(Self { filter, gamma, kp, p, projections })
    }

    pub fn filter(&self) -> &FilterSpec {
        &self.filter
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.filter.clone(), gamma, self.kp.clone(), self.p.clone(), self.projections.clone())
    }

    pub fn kp(&self, mode: usize) -> &Matrix {
        &self.kp[mode]
    }

    pub fn kp_all(&self) -> &[Matrix] {
        &self.kp
    }

    pub fn p(&self, mode: usize) -> &Matrix {
        &self.p[mode]
    }

    pub fn modes(&self) -> usize {
        self.p.len()
    }

    pub fn projections(&self) -> &ProjectionSet {
        &self.projections
    }

    /// Largest `‖B_pᵀ P_p B_p‖`; sets the natural frequency of the
    /// adaptation loop, roughly `√(Γ‖BᵀPB‖)`.
    pub fn adaptation_stiffness(&self, family: &[LtiSubsystem]) -> f64 {
        family
            .iter()
            .zip(&self.p)
            .map(|(sys, p)| linalg::norm2(&(sys.b().transpose() * p * sys.b())))
            .fold(0.0, f64::max)
    }

    /// Largest step keeping `dt·√(Γ‖BᵀPB‖) ≤ 0.2`, well inside the RK4
    /// stability region for the oscillatory adaptation loop.
    pub fn max_stable_dt(&self, family: &[LtiSubsystem]) -> f64 {
        0.2 / (self.gamma * self.adaptation_stiffness(family)).sqrt()
    }
}

/// Predictor, estimates and control-filter states.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    pub x_hat: Vector,
    pub theta_hat: Matrix,
    pub sigma_hat: Vector,
    pub omega_hat: Matrix,
    pub x_f: Vector,
    pub x_i: Vector,
}

impl ControllerState {
    /// `x̂ = x0`, `θ̂ = 0`, `σ̂ = 0`, `ω̂ = 𝕀`, filter and integrator at rest.
    pub fn initial(x0: &Vector, m: usize, nf: usize) -> Self {
        let n = x0.len();
        Self {
            x_hat: x0.clone(),
            theta_hat: Matrix::zeros(n, m),
            sigma_hat: Vector::zeros(m),
            omega_hat: Matrix::identity(m, m),
            x_f: Vector::zeros(nf),
            x_i: Vector::zeros(m),
        }
    }

    /// Control currently applied, `u = −x_I`.
    pub fn control(&self) -> Vector {
        -&self.x_i
    }
}

/// Matched input `ω u + θᵀ x + σ` entering through `B`.
pub fn matched_input(omega: &Matrix, u: &Vector, theta: &Matrix, x: &Vector, sigma: &Vector) -> Vector {
    omega * u + theta.tr_mul(x) + sigma
}

/// `A_p x̂ + B_p(ω̂ u + θ̂ᵀ x + σ̂)`, with `θ̂ᵀ` acting on the measured state.
pub fn predictor_derivative(state: &ControllerState, x: &Vector, u: &Vector, sys: &LtiSubsystem) -> Vector {
    sys.a() * &state.x_hat + sys.b() * matched_input(&state.omega_hat, u, &state.theta_hat, x, &state.sigma_hat)
}

/// `μ = ω̂ u + θ̂ᵀ x + σ̂ − k_p r`.
pub fn control_input_mu(state: &ControllerState, x: &Vector, u: &Vector, r: &Vector, kp: &Matrix) -> Vector {
    matched_input(&state.omega_hat, u, &state.theta_hat, x, &state.sigma_hat) - kp * r
}

/// Estimate derivatives `(θ̂̇, σ̂̇, ω̂̇)` from the projected gradient laws
/// with the active mode's `P_p`, `B_p`.
pub fn adaptation_derivatives(
    x_tilde: &Vector,
    x: &Vector,
    u: &Vector,
    state: &ControllerState,
    mode: usize,
    sys: &LtiSubsystem,
    cfg: &ControllerConfig,
) -> (Matrix, Vector, Matrix) {
    // gradient shared by all three laws: Bᵀ P x̃ (m-vector)
    let g = sys.b().tr_mul(&(cfg.p(mode) * x_tilde));
    let raw_theta = -(x * g.transpose());
    let raw_sigma = -&g;
    let raw_omega = -(&g * u.transpose());
    let proj = cfg.projections();
    let d_theta = project_columns(&state.theta_hat, &raw_theta, &proj.theta) * cfg.gamma();
    let d_sigma = projection(&state.sigma_hat, &raw_sigma, &proj.sigma) * cfg.gamma();
    let d_omega = project_columns(&state.omega_hat, &raw_omega, &proj.omega) * cfg.gamma();
    (d_theta, d_sigma, d_omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::uncertainty::UncertaintyBounds;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix {
        linalg::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn aircraft_137() -> LtiSubsystem {
        LtiSubsystem::without_output("137", m(&[&[-0.5147, 0.9357], &[-0.6219, -0.5309]]), m(&[&[-0.0006], &[-0.0115]]))
            .unwrap()
    }

    fn simple_config(p: Matrix, gamma: f64) -> ControllerConfig {
        let bounds = UncertaintyBounds::symmetric(2, 1, 50.0, 20.0, (0.5, 1.5)).unwrap();
        ControllerConfig::new(
            FilterSpec::constant(4.0 * std::f64::consts::PI, 1).unwrap(),
            gamma,
            vec![Matrix::identity(1, 1)],
            vec![p],
            ProjectionSet::for_bounds(&bounds).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_prediction_error_freezes_estimates() {
        let sys = aircraft_137();
        let cfg = simple_config(Matrix::identity(2, 2), 1e4);
        let st = ControllerState::initial(&Vector::from_column_slice(&[1.0, 2.0]), 1, 0);
        let (dt, ds, dw) = adaptation_derivatives(
            &Vector::zeros(2),
            &Vector::from_column_slice(&[1.0, 2.0]),
            &Vector::from_element(1, 3.0),
            &st,
            0,
            &sys,
            &cfg,
        );
        assert_eq!(dt.amax(), 0.0);
        assert_eq!(ds.amax(), 0.0);
        assert_eq!(dw.amax(), 0.0);
    }

    #[test]
    fn hand_evaluated_adaptation_rates() {
        // P = 𝕀, B = [0; 1], x̃ = [0; 1], x = [1; 2], u = 3, Γ = 10:
        // BᵀPx̃ = 1 ⇒ θ̂̇ = −10·[1; 2], σ̂̇ = −10, ω̂̇ = −30.
        let sys = LtiSubsystem::without_output("t", m(&[&[-1.0, 0.0], &[0.0, -1.0]]), m(&[&[0.0], &[1.0]])).unwrap();
        let cfg = simple_config(Matrix::identity(2, 2), 10.0);
        let x = Vector::from_column_slice(&[1.0, 2.0]);
        let st = ControllerState::initial(&x, 1, 0);
        let (dt, ds, dw) = adaptation_derivatives(
            &Vector::from_column_slice(&[0.0, 1.0]),
            &x,
            &Vector::from_element(1, 3.0),
            &st,
            0,
            &sys,
            &cfg,
        );
        assert_relative_eq!(dt[(0, 0)], -10.0);
        assert_relative_eq!(dt[(1, 0)], -20.0);
        assert_relative_eq!(ds[0], -10.0);
        assert_relative_eq!(dw[(0, 0)], -30.0);
    }

    #[test]
    fn predictor_with_true_parameters_matches_plant() {
        let sys = aircraft_137();
        let x = Vector::from_column_slice(&[0.3, -0.2]);
        let u = Vector::from_element(1, 0.7);
        let (omega, theta, sigma) = (m(&[&[1.2]]), m(&[&[-40.0], &[-40.0]]), Vector::from_element(1, 1.0));
        let mut st = ControllerState::initial(&x, 1, 0);
        st.omega_hat = omega.clone();
        st.theta_hat = theta.clone();
        st.sigma_hat = sigma.clone();
        let plant = sys.a() * &x + sys.b() * matched_input(&omega, &u, &theta, &x, &sigma);
        assert_eq!(predictor_derivative(&st, &x, &u, &sys), plant);
    }

    #[test]
    fn predictor_arithmetic_on_aircraft_model() {
        let sys = aircraft_137();
        let x = Vector::from_column_slice(&[1.0, 1.0]);
        let mut st = ControllerState::initial(&Vector::from_column_slice(&[1.0, 0.0]), 1, 0);
        st.theta_hat = m(&[&[0.5], &[0.5]]);
        st.sigma_hat = Vector::from_element(1, 2.0);
        // A[1;0] + B·(1·1 + 0.5 + 0.5 + 2) = A[:,0] + 4B
        let d = predictor_derivative(&st, &x, &Vector::from_element(1, 1.0), &sys);
        assert_relative_eq!(d[0], -0.5147 + 4.0 * -0.0006, epsilon = 1e-15);
        assert_relative_eq!(d[1], -0.6219 + 4.0 * -0.0115, epsilon = 1e-15);
        // zero estimates, u = 0 reduce to A x̂
        let st0 = ControllerState::initial(&Vector::from_column_slice(&[1.0, 0.0]), 1, 0);
        let d0 = predictor_derivative(&st0, &x, &Vector::zeros(1), &sys);
        assert_eq!(d0, sys.a() * &st0.x_hat);
    }

    #[test]
    fn projection_radii_cover_boxes() {
        let bounds = UncertaintyBounds::symmetric(2, 1, 50.0, 20.0, (0.5, 1.5)).unwrap();
        let set = ProjectionSet::for_bounds(&bounds).unwrap();
        assert_relative_eq!(set.theta[0].theta_max(), 1.1 * 5000f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(set.sigma.theta_max(), 22.0, epsilon = 1e-12);
        assert_relative_eq!(set.omega[0].theta_max(), 1.65, epsilon = 1e-12);
    }

    #[test]
    fn config_validation() {
        let bounds = UncertaintyBounds::zero(2, 1);
        let f = FilterSpec::constant(1.0, 1).unwrap();
        let proj = ProjectionSet::for_bounds(&bounds).unwrap();
        let bad_p = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(ControllerConfig::new(f.clone(), 1.0, vec![Matrix::identity(1, 1)], vec![bad_p], proj.clone()).is_err());
        assert!(ControllerConfig::new(f, 0.0, vec![Matrix::identity(1, 1)], vec![Matrix::identity(2, 2)], proj).is_err());
    }

    #[test]
    fn dc_gain_feedforward_mode() {
        let sys = LtiSubsystem::new("so", m(&[&[0.0, 1.0], &[-2.0, -3.0]]), m(&[&[0.0], &[1.0]]), m(&[&[1.0, 0.0]]))
            .unwrap();
        let k = FeedforwardMode::DcGain.resolve(&[sys.clone()]).unwrap();
        assert_relative_eq!(k[0][(0, 0)], 2.0, epsilon = 1e-12);
        let k = FeedforwardMode::Explicit(vec![vec![3.0]]).resolve(&[sys]).unwrap();
        assert_eq!(k[0][(0, 0)], 3.0);
    }
}
