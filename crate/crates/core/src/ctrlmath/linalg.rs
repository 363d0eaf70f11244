//! Spectral quantities, norms and square roots on [`Mat`].

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::Mat;
use crate::error::{dim, domain, numerical, Result};

const EIG_EPS: f64 = f64::EPSILON;

fn max_iter(n: usize) -> usize {
    1000 * n.max(10)
}

/// All eigenvalues of a square matrix, complex pairs included.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(dim(format!("eigenvalues need a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let n = m.rows();
    if n == 1 {
        return Ok(vec![Complex64::new(m.get(0, 0), 0.0)]);
    }
    let schur = m
        .as_dmatrix()
        .clone()
        .try_schur(EIG_EPS, max_iter(n))
        .ok_or_else(|| numerical("Schur iteration did not converge"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows().min(m.ncols());
    let svd = m
        .clone()
        .try_svd(false, false, EIG_EPS, max_iter(n))
        .ok_or_else(|| numerical("SVD did not converge"))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Spectral (l2 -> l2) norm: the largest singular value.
pub fn operator_norm(m: &Mat) -> Result<f64> {
    Ok(singular_values(m.as_dmatrix())?[0])
}

pub(crate) fn operator_norm_raw(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    Ok(singular_values(m)?[0])
}

/// Numerical rank with threshold `1e-10 * sigma_max`.
pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> Result<usize> {
    let s = singular_values(m)?;
    let top = s[0];
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > 1e-10 * top).count())
}

fn symmetric_eigen(s: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = s.nrows();
    SymmetricEigen::try_new(s.clone(), EIG_EPS, max_iter(n))
        .ok_or_else(|| numerical("symmetric eigendecomposition did not converge"))
}

fn symmetrized(s: &Mat) -> DMatrix<f64> {
    let d = s.as_dmatrix();
    (d + d.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `s`.
pub fn min_eigenvalue_sym(s: &Mat) -> Result<f64> {
    if !s.is_square() {
        return Err(dim("expected a square matrix"));
    }
    let eig = symmetric_eigen(&symmetrized(s))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Checks that `s` is symmetric PSD within `1e-10 * ||s||`.
pub fn is_symmetric_psd(s: &Mat) -> Result<bool> {
    if !s.is_square() {
        return Ok(false);
    }
    let scale = operator_norm(s)?;
    if scale == 0.0 {
        return Ok(true);
    }
    if s.asymmetry() > 1e-10 * scale {
        return Ok(false);
    }
    Ok(min_eigenvalue_sym(s)? >= -1e-10 * scale)
}

/// Checks that `s` is symmetric PD: smallest eigenvalue above `1e-12 * ||s||`.
pub fn is_symmetric_pd(s: &Mat) -> Result<bool> {
    if !s.is_square() {
        return Ok(false);
    }
    let scale = operator_norm(s)?;
    if scale == 0.0 {
        return Ok(false);
    }
    if s.asymmetry() > 1e-10 * scale {
        return Ok(false);
    }
    Ok(min_eigenvalue_sym(s)? > 1e-12 * scale)
}

/// Principal square root of a symmetric PSD matrix.
///
/// Slightly negative eigenvalues (down to `-1e-10 * ||s||`) are clamped to zero.
pub fn psd_sqrt(s: &Mat) -> Result<Mat> {
    if !s.is_square() {
        return Err(dim(format!("psd_sqrt needs a square matrix, got {}x{}", s.rows(), s.cols())));
    }
    let scale = operator_norm(s)?;
    if scale == 0.0 {
        return Ok(Mat::zeros(s.rows(), s.cols()));
    }
    if s.asymmetry() > 1e-10 * scale {
        return Err(domain("psd_sqrt input is not symmetric"));
    }
    let eig = symmetric_eigen(&symmetrized(s))?;
    let mut roots = eig.eigenvalues.clone();
    for lam in roots.iter_mut() {
        if *lam < -1e-10 * scale {
            return Err(domain(format!("psd_sqrt input is indefinite (eigenvalue {lam})")));
        }
        *lam = lam.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    let x = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Mat::from_dmatrix((&x + x.transpose()) * 0.5)
}

/// Numerical rank of the controllability matrix `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_rank(a: &Mat, b: &Mat) -> Result<usize> {
    if !a.is_square() {
        return Err(dim("A must be square"));
    }
    if b.rows() != a.rows() {
        return Err(dim(format!("B has {} rows, A is {}x{}", b.rows(), a.rows(), a.cols())));
    }
    numerical_rank(&controllability_matrix(a.as_dmatrix(), b.as_dmatrix()))
}

pub(crate) fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut c = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for i in 0..n {
        c.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    c
}

/// Inverse of a symmetric positive definite matrix via Cholesky, falling
/// back to LU when the factorization breaks down.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.inverse());
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| numerical("matrix is numerically singular"))
}
