use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// One mode `(A, B, C)` of the switched plant family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubsystemDoc", into = "SubsystemDoc")]
pub struct LtiSubsystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    label: String,
}

impl LtiSubsystem {
    /// Validates dimensions (`A` n×n, `B` n×m, `C` m×n, n ≥ m ≥ 1) and that
    /// `B` has full column rank.
    pub fn new(label: impl Into<String>, a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let label = label.into();
        let n = a.nrows();
        let m = b.ncols();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::Dimension(format!(
                "mode `{label}`: A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if m == 0 || n < m {
            return Err(Error::Dimension(format!("mode `{label}`: need n >= m >= 1, got n={n}, m={m}")));
        }
        if c.nrows() != m || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "mode `{label}`: C must be {m}x{n}, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("mode `{label}`: non-finite matrix entry")));
        }
        linalg::left_pseudoinverse(&b).map_err(|_| Error::Singular {
            mode: label.clone(),
            what: "B does not have full column rank".into(),
        })?;
        Ok(Self { a, b, c, label })
    }

    /// Mode without a regulated output; `C` is set to zero.
    pub fn without_output(label: impl Into<String>, a: Matrix, b: Matrix) -> Result<Self> {
        let c = Matrix::zeros(b.ncols(), a.nrows());
        Self::new(label, a, b, c)
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

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn b_pinv(&self) -> Matrix {
        linalg::left_pseudoinverse(&self.b).expect("rank checked at construction")
    }
}

/// Feedforward gain `k = -(C A⁻¹ B)⁻¹`, the inverse DC gain of the mode.
pub fn dc_feedforward_gain(sys: &LtiSubsystem) -> Result<Matrix> {
    let singular = |what: &str| Error::Singular { mode: sys.label.clone(), what: what.into() };
    let lu = sys.a.clone().lu();
    let a_inv_b = lu.solve(&sys.b).filter(|_| lu_nonsingular(&sys.a)).ok_or_else(|| singular("A is singular"))?;
    let dc = &sys.c * a_inv_b;
    if !lu_nonsingular(&dc) {
        return Err(singular("DC gain C A^-1 B is singular"));
    }
    let inv = dc.try_inverse().ok_or_else(|| singular("DC gain C A^-1 B is singular"))?;
    Ok(-inv)
}

fn lu_nonsingular(m: &Matrix) -> bool {
    let scale = m.amax();
    if scale == 0.0 {
        return false;
    }
    let det = m.clone().lu().determinant().abs();
    det > 1e-12 * scale.powi(m.nrows() as i32)
}

/// Serialized form of a mode; matrices are row-major and `c` is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemDoc {
    pub label: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
}

impl TryFrom<SubsystemDoc> for LtiSubsystem {
    type Error = Error;

    fn try_from(doc: SubsystemDoc) -> Result<Self> {
        let a = linalg::from_rows(&doc.a)?;
        let b = linalg::from_rows(&doc.b)?;
        match doc.c {
            Some(c) => Self::new(doc.label, a, b, linalg::from_rows(&c)?),
            None => Self::without_output(doc.label, a, b),
        }
    }
}

impl From<LtiSubsystem> for SubsystemDoc {
    fn from(s: LtiSubsystem) -> Self {
        Self {
            label: s.label,
            a: linalg::to_rows(&s.a),
            b: linalg::to_rows(&s.b),
            c: Some(linalg::to_rows(&s.c)),
        }
    }
}
