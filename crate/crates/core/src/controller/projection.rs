//! Smooth projection operator keeping adaptive estimates in a ball.
//!
//! With `f(θ) = ((ε+1)θᵀθ − θ_max²)/(ε θ_max²)` the operator is
//!
//! ```text
//! Proj(θ, y) = y − θθᵀy f(θ)/‖θ‖²   if f(θ) ≥ 0 and θᵀy > 0
//!            = y                     otherwise
//! ```
//!
//! `f ≤ 0` on the ball of radius `θ_max/√(1+ε)` and `f = 1` on the sphere of
//! radius `θ_max`; the latter is invariant under `θ̇ = Proj(θ, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    theta_max: f64,
    epsilon: f64,
}

impl ProjectionConfig {
    pub fn new(theta_max: f64, epsilon: f64) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("projection bound must be positive, got {theta_max}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("projection tolerance must be positive, got {epsilon}")));
        }
        Ok(Self { theta_max, epsilon })
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The convex function `f(θ)` given `θᵀθ`.
    pub fn boundary_fn(&self, norm_sq: f64) -> f64 {
        let tm2 = self.theta_max * self.theta_max;
        ((self.epsilon + 1.0) * norm_sq - tm2) / (self.epsilon * tm2)
    }

    /// Radius of the ε-inflated containment set, `θ_max·√(1+ε)`.
    pub fn inflated_radius(&self) -> f64 {
        self.theta_max * (1.0 + self.epsilon).sqrt()
    }
}

/// Applies the operator to slices; `out` receives `Proj(theta, y)`.
pub fn project_into(theta: &[f64], y: &[f64], cfg: &ProjectionConfig, out: &mut [f64]) {
    debug_assert_eq!(theta.len(), y.len());
    let norm_sq: f64 = theta.iter().map(|v| v * v).sum();
    let f = cfg.boundary_fn(norm_sq);
    let dot: f64 = theta.iter().zip(y).map(|(a, b)| a * b).sum();
    if f >= 0.0 && dot > 0.0 {
        // f ≥ 0 implies ‖θ‖ > 0
        let scale = dot * f / norm_sq;
        for ((o, yi), ti) in out.iter_mut().zip(y).zip(theta) {
            *o = yi - ti * scale;
        }
    } else {
        out.copy_from_slice(y);
    }
}

pub fn projection(theta: &Vector, y: &Vector, cfg: &ProjectionConfig) -> Vector {
    let mut out = Vector::zeros(y.len());
    project_into(theta.as_slice(), y.as_slice(), cfg, out.as_mut_slice());
    out
}

/// Columnwise projection of a matrix estimate, one config per column.
pub fn project_columns(theta: &Matrix, y: &Matrix, cfgs: &[ProjectionConfig]) -> Matrix {
    let mut out = Matrix::zeros(y.nrows(), y.ncols());
    let r = y.nrows();
    for (j, cfg) in cfgs.iter().enumerate().take(y.ncols()) {
        let t = &theta.as_slice()[j * r..(j + 1) * r];
        let yy = &y.as_slice()[j * r..(j + 1) * r];
        project_into(t, yy, cfg, &mut out.as_mut_slice()[j * r..(j + 1) * r]);
    }
    out
}
