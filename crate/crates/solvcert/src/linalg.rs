//! Dense Hermitian helpers shared by the certificate machinery.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix: real eigenvalues ascending,
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen: matrix must be square");
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn spectral_norm(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.first().copied().unwrap_or(0.0)
}

/// Smallest and largest-magnitude eigenvalue in one decomposition.
pub fn eigen_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    let (vals, _) = hermitian_eigen(m);
    (vals.first().copied().unwrap_or(0.0), spectral_norm(&vals))
}

/// PSD test relative to the spectral norm: min eig >= -tol * ||m||_2.
pub fn is_psd(m: &DMatrix<Complex64>, tol: f64) -> bool {
    let (min, norm) = eigen_extremes(m);
    min >= -tol * norm.max(1e-300)
}

/// Orthonormal basis of the numerical null space: eigenvectors whose
/// eigenvalue satisfies |lambda| <= tol * ||m||_2.
pub fn null_basis(m: &DMatrix<Complex64>, tol: f64) -> Vec<DVector<Complex64>> {
    let (vals, vecs) = hermitian_eigen(m);
    let norm = spectral_norm(&vals);
    let mut basis = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v.abs() <= tol * norm {
            basis.push(vecs.column(i).into_owned());
        }
    }
    basis
}

/// Pseudoinverse solve x = m^+ b for Hermitian m, treating eigenvalues with
/// |lambda| <= tol * ||m||_2 as zero. Returns (x, ||m x - b||).
pub fn pinv_solve(
    m: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    tol: f64,
) -> (DVector<Complex64>, f64) {
    let (vals, vecs) = hermitian_eigen(m);
    let norm = spectral_norm(&vals);
    let mut x = DVector::zeros(b.len());
    for (i, &v) in vals.iter().enumerate() {
        if v.abs() > tol * norm {
            let u = vecs.column(i);
            let coeff = u.dotc(b) / Complex64::new(v, 0.0);
            x += u * coeff;
        }
    }
    let resid = (m * &x - b).norm();
    (x, resid)
}

/// Solve m x = b for Hermitian positive definite m (Cholesky, LU fallback).
pub fn solve_hpd(m: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Option<DVector<Complex64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.solve(b));
    }
    m.clone().lu().solve(b)
}
