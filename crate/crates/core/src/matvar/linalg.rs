//! Dense symmetric linear algebra used throughout the crate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative Frobenius asymmetry accepted by the symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn asymmetry(s: &DMatrix<f64>) -> f64 {
    let norm = s.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (s - s.transpose()).norm() / norm
}

pub fn check_square(s: &DMatrix<f64>) -> Result<usize> {
    if s.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    Ok(s.nrows())
}

pub fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    check_square(s)?;
    let a = asymmetry(s);
    if a > SYMMETRY_TOL || a.is_nan() {
        return Err(Error::NotSymmetric(a));
    }
    Ok(())
}

pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Eigenvalues sorted descending with matching orthonormal eigenvectors
/// (as columns).
pub fn sym_eig(s: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_symmetric(s)?;
    Ok(sym_eig_unchecked(&symmetrize(s)))
}

pub(crate) fn sym_eig_unchecked(s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = s.nrows();
    let eig = s.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Descending eigenvalues of a matrix already known to be symmetric up
/// to rounding (products formed inside this crate).
pub(crate) fn eigenvalues_of(s: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = symmetrize(s)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn min_eigenvalue(s: &DMatrix<f64>) -> f64 {
    eigenvalues_of(s).last().copied().unwrap_or(f64::NAN)
}

pub fn cholesky(s: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    check_symmetric(s)?;
    Cholesky::new(symmetrize(s)).ok_or_else(|| {
        Error::NotPositiveDefinite(format!("minimum eigenvalue {:e}", min_eigenvalue(s)))
    })
}

/// Validates a symmetric positive definite matrix.
pub fn check_pd(s: &DMatrix<f64>) -> Result<()> {
    cholesky(s).map(|_| ())
}

pub fn ln_det_pd(s: &DMatrix<f64>) -> Result<f64> {
    let c = cholesky(s)?;
    Ok(2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

pub fn inverse_pd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&cholesky(s)?.inverse()))
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn sym_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eig(s)?;
    if vals.iter().any(|&v| v < -1e-12 * vals[0].abs().max(1.0)) {
        return Err(Error::NotPositiveDefinite(
            "negative eigenvalue in square root".into(),
        ));
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    Ok(symmetrize(&(&vecs * d * vecs.transpose())))
}

/// Symmetric inverse square root of a positive definite matrix.
pub fn sym_inv_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eig(s)?;
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite("non-positive eigenvalue".into()));
    }
    let d = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
    Ok(symmetrize(&(&vecs * d * vecs.transpose())))
}

/// Spectral radius of a symmetric matrix.
pub fn spectral_radius(s: &DMatrix<f64>) -> f64 {
    eigenvalues_of(s)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Row-major vectorization `(x11, ..., x1n, ..., xm1, ..., xmn)`.
pub fn vec_row_major(x: &DMatrix<f64>) -> DVector<f64> {
    let (m, n) = x.shape();
    DVector::from_iterator(m * n, (0..m).flat_map(|i| (0..n).map(move |j| x[(i, j)])))
}

pub fn unvec_row_major(v: &DVector<f64>, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_iterator(m, n, v.iter().copied())
}

pub fn is_identity(s: &DMatrix<f64>, tol: f64) -> bool {
    s.nrows() == s.ncols() && (s - DMatrix::identity(s.nrows(), s.ncols())).norm() <= tol
}
