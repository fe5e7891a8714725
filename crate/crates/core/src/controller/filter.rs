use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

type CMatrix = DMatrix<Complex<f64>>;

/// Minimal realization `(A_f, B_f, C_f, D_f)` of the proper stable
/// transfer matrix `D0(s)` in the control law `u = -(D0(s)/s) μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl FilterSpec {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let nf = a.nrows();
        let m = d.nrows();
        if a.ncols() != nf || b.shape() != (nf, m) || c.shape() != (m, nf) || d.shape() != (m, m) {
            return Err(Error::Dimension("filter realization blocks are inconsistent".into()));
        }
        if m == 0 {
            return Err(Error::Dimension("filter must have at least one channel".into()));
        }
        if nf > 0 && !linalg::is_hurwitz(&a) {
            return Err(Error::InvalidArgument("filter state matrix A_f must be Hurwitz".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// `D0(s) = gain·𝕀` (no filter states).
    pub fn constant(gain: f64, m: usize) -> Result<Self> {
        Self::new(Matrix::zeros(0, 0), Matrix::zeros(0, m), Matrix::zeros(m, 0), Matrix::identity(m, m) * gain)
    }

    /// `D0(s) = numerator / (s + pole)` on each channel.
    pub fn first_order(numerator: f64, pole: f64, m: usize) -> Result<Self> {
        let eye = Matrix::identity(m, m);
        Self::new(&eye * -pole, eye.clone(), &eye * numerator, Matrix::zeros(m, m))
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn nf(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.d.nrows()
    }

    /// `D0(s) = C_f (s𝕀 − A_f)⁻¹ B_f + D_f` at a complex frequency.
    pub fn transfer_at(&self, s: Complex<f64>) -> Result<CMatrix> {
        let d = to_complex(&self.d);
        if self.nf() == 0 {
            return Ok(d);
        }
        let nf = self.nf();
        let resolvent = CMatrix::identity(nf, nf) * s - to_complex(&self.a);
        let x = resolvent
            .lu()
            .solve(&to_complex(&self.b))
            .ok_or_else(|| Error::InvalidArgument(format!("s = {s} is a filter pole")))?;
        Ok(to_complex(&self.c) * x + d)
    }

    /// `D0(0) = D_f − C_f A_f⁻¹ B_f`.
    pub fn dc_gain(&self) -> Matrix {
        if self.nf() == 0 {
            return self.d.clone();
        }
        let x = self.a.clone().lu().solve(&self.b).expect("A_f is Hurwitz, hence invertible");
        &self.d - &self.c * x
    }

    /// `(ẋ_f, ẋ_I) = (A_f x_f + B_f μ, C_f x_f + D_f μ)`; the control is read
    /// as `u = −x_I`.
    pub fn derivative(&self, x_f: &Vector, mu: &Vector) -> (Vector, Vector) {
        let dxf = &self.a * x_f + &self.b * mu;
        let dxi = &self.c * x_f + &self.d * mu;
        (dxf, dxi)
    }
}

/// Filter derivatives for the control law given the current `μ`. `x_f` may
/// be empty when `D0` is a constant.
pub fn control_filter_derivative(x_f: &Vector, mu: &Vector, filter: &FilterSpec) -> (Vector, Vector) {
    filter.derivative(x_f, mu)
}

fn to_complex(m: &Matrix) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

/// `𝒞(s) = ω (s𝕀 + D0(s) ω)⁻¹ D0(s)` at a complex frequency.
pub fn closed_loop_filter_at(filter: &FilterSpec, omega: &Matrix, s: Complex<f64>) -> Result<CMatrix> {
    let m = filter.m();
    let d0 = filter.transfer_at(s)?;
    let w = to_complex(omega);
    let inner = CMatrix::identity(m, m) * s + &d0 * &w;
    let x = inner
        .lu()
        .solve(&d0)
        .ok_or_else(|| Error::InvalidArgument("s𝕀 + D0(s)ω is singular".into()))?;
    Ok(w * x)
}

/// DC value of the closed-loop filter; equals `𝕀` whenever `D0(0)ω` is
/// invertible.
pub fn closed_loop_filter_dc_check(filter: &FilterSpec, omega: &Matrix) -> Result<Matrix> {
    let d0 = filter.dc_gain();
    let prod = &d0 * omega;
    let scale = prod.amax();
    let det = prod.clone().lu().determinant();
    if scale == 0.0 || det.abs() <= 1e-12 * scale.powi(prod.nrows() as i32) {
        return Err(Error::InvalidArgument("D0(0)·ω is singular; filter misconfigured".into()));
    }
    let x = prod.lu().solve(&d0).expect("checked nonsingular");
    Ok(omega * x)
}

/// Config-file form of a filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FilterDoc {
    Constant { gain: f64 },
    FirstOrder { numerator: f64, pole: f64 },
    StateSpace { a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>, d: Vec<Vec<f64>> },
}

impl FilterDoc {
    pub fn build(&self, m: usize) -> Result<FilterSpec> {
        match self {
            FilterDoc::Constant { gain } => FilterSpec::constant(*gain, m),
            FilterDoc::FirstOrder { numerator, pole } => FilterSpec::first_order(*numerator, *pole, m),
            FilterDoc::StateSpace { a, b, c, d } => {
                let nf = a.len();
                let shaped = |rows: &Vec<Vec<f64>>, r: usize, c: usize| -> Result<Matrix> {
                    if rows.is_empty() {
                        Ok(Matrix::zeros(r, c))
                    } else {
                        linalg::from_rows(rows)
                    }
                };
                FilterSpec::new(shaped(a, nf, nf)?, shaped(b, nf, m)?, shaped(c, m, nf)?, shaped(d, m, m)?)
            }
        }
    }
}
