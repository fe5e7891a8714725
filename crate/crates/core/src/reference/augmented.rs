use crate::controller::filter::FilterSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::sim::system::LtiSubsystem;

/// Reference closed loop in augmented form, state `x̄ = [x; x_f; x_I]`:
///
/// ```text
/// ẋ̄ = Ā x̄ + B̄ σ + Ē r,    u = C̄ x̄
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSystem {
    pub a_bar: Matrix,
    pub b_bar: Matrix,
    pub e_bar: Matrix,
    pub c_bar: Matrix,
    /// Block sizes `(n, n_f, m)`.
    pub partition: (usize, usize, usize),
}

impl AugmentedSystem {
    pub fn dim(&self) -> usize {
        let (n, nf, m) = self.partition;
        n + nf + m
    }
}

/// `Ā(θ, ω)` and the input matrices for one mode.
///
/// Signs follow from the cascade `μ = ω u + θᵀx + σ − k_p r`, `u = −x_I`:
///
/// ```text
/// Ā = [ A + Bθᵀ   0    −Bω   ]     B̄ = [ B  ]     Ē = −[ 0  ] k_p
///     [ B_f θᵀ    A_f  −B_f ω ]         [ B_f ]          [ B_f ]
///     [ D_f θᵀ    C_f  −D_f ω ]         [ D_f ]          [ D_f ]
/// ```
pub fn build_augmented(sys: &LtiSubsystem, filter: &FilterSpec, theta: &Matrix, omega: &Matrix, kp: &Matrix) -> Result<AugmentedSystem> {
    let (n, m, nf) = (sys.n(), sys.m(), filter.nf());
    if filter.m() != m {
        return Err(Error::Dimension(format!("filter has {} channels, plant has {m} inputs", filter.m())));
    }
    if theta.shape() != (n, m) || omega.shape() != (m, m) || kp.shape() != (m, m) {
        return Err(Error::Dimension("θ must be n×m, ω and k_p m×m".into()));
    }
    let tt = theta.transpose();
    let a11 = sys.a() + sys.b() * &tt;
    let a13 = -(sys.b() * omega);
    let a21 = filter.b() * &tt;
    let a23 = -(filter.b() * omega);
    let a31 = filter.d() * &tt;
    let a33 = -(filter.d() * omega);
    let rows = [n, nf, m];
    let a_bar = linalg::blocks(
        &rows,
        &rows,
        &[
            &[Some(&a11), None, Some(&a13)],
            &[Some(&a21), Some(filter.a()), Some(&a23)],
            &[Some(&a31), Some(filter.c()), Some(&a33)],
        ],
    );
    let b_bar = linalg::blocks(&rows, &[m], &[&[Some(sys.b())], &[Some(filter.b())], &[Some(filter.d())]]);
    let bf_kp = -(filter.b() * kp);
    let df_kp = -(filter.d() * kp);
    let e_bar = linalg::blocks(&rows, &[m], &[&[None], &[Some(&bf_kp)], &[Some(&df_kp)]]);
    let minus_eye = -Matrix::identity(m, m);
    let c_bar = linalg::blocks(&[m], &rows, &[&[None, None, Some(&minus_eye)]]);
    Ok(AugmentedSystem { a_bar, b_bar, e_bar, c_bar, partition: (n, nf, m) })
}

/// Blocks of the tracking-error dynamics used by the performance bound.
///
/// With `M = [B_f; D_f]`, `x̃` the prediction error and `w` the
/// `(x_f, x_I)`-sized auxiliary state, the tracking error splits as
/// `ē = z + [0; w − M B† x̃]` where
///
/// ```text
/// ż = Ā z + H̄ w + J̄ x̃,    ẇ = F̄ w + Ḡ x̃
/// ```
///
/// and `F̄` is the lower-right `(n_f+m)` block of `Ā`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorDynamicsBlocks {
    pub h_bar: Matrix,
    pub j_bar: Matrix,
    pub f_bar: Matrix,
    pub g_bar: Matrix,
    /// `D_f B†`, the direct `x̃ → e_u` feedthrough.
    pub du_bar: Matrix,
    pub b_pinv: Matrix,
}

pub fn build_error_blocks(sys: &LtiSubsystem, filter: &FilterSpec, omega: &Matrix) -> Result<ErrorDynamicsBlocks> {
    let (n, m, nf) = (sys.n(), sys.m(), filter.nf());
    if filter.m() != m || omega.shape() != (m, m) {
        return Err(Error::Dimension("filter channels and ω must match the plant input size".into()));
    }
    let b_pinv = linalg::left_pseudoinverse(sys.b()).map_err(|_| Error::Singular {
        mode: sys.label().to_string(),
        what: "B does not have full column rank".into(),
    })?;
    let w = [nf, m];
    let bf_w = -(filter.b() * omega);
    let df_w = -(filter.d() * omega);
    let f_bar = linalg::blocks(&w, &w, &[&[Some(filter.a()), Some(&bf_w)], &[Some(filter.c()), Some(&df_w)]]);
    let b_w = -(sys.b() * omega);
    let h_bar = linalg::blocks(&[n, nf, m], &w, &[&[None, Some(&b_w)], &[None, None], &[None, None]]);
    let m_blk = linalg::blocks(&w, &[m], &[&[Some(filter.b())], &[Some(filter.d())]]);
    let mb = &m_blk * &b_pinv;
    let g_bar = &mb * sys.a() - &f_bar * &mb;
    let j_bar = -(&h_bar * &mb);
    let du_bar = filter.d() * &b_pinv;
    Ok(ErrorDynamicsBlocks { h_bar, j_bar, f_bar, g_bar, du_bar, b_pinv })
}
