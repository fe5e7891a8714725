//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Every matrix in this crate is at most a few dozen rows, so the helpers
//! favour clarity over blocking or in-place tricks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Builds a matrix from row-major nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`, eigenvalues ascending.
pub fn sym_eigen(m: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut eig = SymmetricEigen::new(symmetrize(m));
    sort_eigen(&mut eig);
    eig
}

fn sort_eigen(eig: &mut SymmetricEigen<f64, nalgebra::Dyn>) {
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    eig.eigenvalues = values;
    eig.eigenvectors = vectors;
}

pub fn sym_eigenvalues(m: &Matrix) -> Vector {
    sym_eigen(m).eigenvalues
}

pub fn min_eig_sym(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym_eigenvalues(m)[0]
}

pub fn max_eig_sym(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let ev = sym_eigenvalues(m);
    ev[ev.len() - 1]
}

/// Applies `f` to the eigenvalues of the symmetric matrix `m`.
pub fn sym_map(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let eig = sym_eigen(m);
    let mapped = eig.eigenvalues.map(f);
    let v = &eig.eigenvectors;
    let scaled = Matrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * mapped[c]);
    symmetrize(&(scaled * v.transpose()))
}

/// Nearest (Frobenius) symmetric matrix with all eigenvalues >= `floor`.
pub fn clip_below(m: &Matrix, floor: f64) -> Matrix {
    sym_map(m, |l| l.max(floor))
}

/// Nearest (Frobenius) symmetric matrix with all eigenvalues <= `ceil`.
pub fn clip_above(m: &Matrix, ceil: f64) -> Matrix {
    sym_map(m, |l| l.min(ceil))
}

/// Largest real part over the eigenvalues of a general square matrix.
pub fn spectral_abscissa(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &Matrix) -> bool {
    spectral_abscissa(a) < 0.0
}

/// Solves `AᵀX + XA = -Q` through the Kronecker form. Intended for n ≲ 20.
pub fn lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let at = a.transpose();
    let eye = Matrix::identity(n, n);
    // vec(AᵀX + XA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X)
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = Vector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular { mode: "lyapunov".into(), what: "Kronecker operator".into() })?;
    Ok(symmetrize(&Matrix::from_column_slice(n, n, sol.as_slice())))
}

/// Left pseudoinverse `(BᵀB)⁻¹Bᵀ` of a full-column-rank matrix.
pub fn left_pseudoinverse(b: &Matrix) -> Result<Matrix> {
    let btb = b.transpose() * b;
    let scale = btb.amax().max(f64::MIN_POSITIVE);
    let chol = nalgebra::Cholesky::new(btb.clone()).filter(|_| min_eig_sym(&btb) > 1e-12 * scale);
    match chol {
        Some(c) => Ok(c.solve(&b.transpose())),
        None => Err(Error::Singular {
            mode: String::new(),
            what: "input matrix B is rank deficient".into(),
        }),
    }
}

/// Largest generalized eigenvalue of the pencil (P_i, P_j), i.e. the smallest
/// `c` with `P_i ≤ c·P_j`. `pj` must be positive definite.
pub fn max_generalized_eig(pi: &Matrix, pj: &Matrix) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(pj))
        .ok_or_else(|| Error::InvalidArgument("matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
    Ok(max_eig_sym(&(&linv * pi * linv.transpose())))
}

/// Induced 2-norm (largest singular value).
pub fn norm2(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// Assembles a block matrix. `None` blocks are zero and sized from their
/// row/column neighbours.
pub fn blocks(rows: &[usize], cols: &[usize], parts: &[&[Option<&Matrix>]]) -> Matrix {
    let total_r: usize = rows.iter().sum();
    let total_c: usize = cols.iter().sum();
    let mut out = Matrix::zeros(total_r, total_c);
    let mut r0 = 0;
    for (bi, &h) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (bj, &w) in cols.iter().enumerate() {
            if let Some(m) = parts[bi][bj] {
                debug_assert_eq!((m.nrows(), m.ncols()), (h, w), "block ({bi},{bj})");
                out.view_mut((r0, c0), (h, w)).copy_from(m);
            }
            c0 += w;
        }
        r0 += h;
    }
    out
}
