//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative eigenvalue cut-off used for ranks, ranges and kernels.
pub const RANK_TOL: f64 = 1e-10;

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Eigen-decomposition of the symmetric part `(m + mᵀ)/2`.
pub fn sym_eigen(m: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
}

/// `true` when `⟨m x, x⟩ ≥ 0` for all `x`, up to `RANK_TOL` relative to the norm of `m`.
pub fn is_monotone_matrix(m: &Matrix) -> bool {
    if m.is_empty() {
        return true;
    }
    let scale = spectral_norm(m).max(1.0);
    sym_eigen(m).eigenvalues.iter().all(|&l| l >= -RANK_TOL * scale)
}

/// Smallest eigenvalue of a symmetric matrix that exceeds the rank tolerance, if any.
pub fn smallest_positive_eigenvalue(sym: &Matrix) -> Option<f64> {
    let scale = spectral_norm(sym).max(1.0);
    let eig = SymmetricEigen::new(sym.clone());
    eig.eigenvalues
        .iter()
        .cloned()
        .filter(|&l| l > RANK_TOL * scale)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
}

/// Orthonormal bases of range and kernel of a symmetric matrix.
pub fn range_and_kernel(sym: &Matrix) -> (Matrix, Matrix) {
    let n = sym.nrows();
    let scale = spectral_norm(sym).max(1.0);
    let eig = SymmetricEigen::new(sym.clone());
    let mut range = Vec::new();
    let mut kernel = Vec::new();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let col = eig.eigenvectors.column(i).into_owned();
        if l.abs() > RANK_TOL * scale {
            range.push(col);
        } else {
            kernel.push(col);
        }
    }
    let to_matrix = |cols: Vec<Vector>| {
        if cols.is_empty() {
            Matrix::zeros(n, 0)
        } else {
            Matrix::from_columns(&cols)
        }
    };
    (to_matrix(range), to_matrix(kernel))
}

/// Orthogonal projector onto the range of the symmetric matrix `sym`.
pub fn range_projector(sym: &Matrix) -> Matrix {
    let (range, _) = range_and_kernel(sym);
    &range * range.transpose()
}

/// Numerical rank.
pub fn rank(m: &Matrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let scale = sv.iter().cloned().fold(0.0, f64::max).max(1.0);
    sv.iter().filter(|&&s| s > RANK_TOL * scale).count()
}

pub fn is_diagonal(m: &Matrix) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

pub fn is_identity(m: &Matrix) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| {
            (0..m.ncols()).all(|j| m[(i, j)] == if i == j { 1.0 } else { 0.0 })
        })
}

pub fn is_zero(m: &Matrix) -> bool {
    m.iter().all(|&v| v == 0.0)
}
