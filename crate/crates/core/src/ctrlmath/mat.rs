use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{dim, domain, Result};

/// Dense real matrix with finite entries.
///
/// Thin wrapper over [`DMatrix<f64>`]; the constructors reject NaN and
/// infinite entries so that every `Mat` in circulation is finite.
#[derive(Clone, PartialEq)]
pub struct Mat(DMatrix<f64>);

impl Mat {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(dim(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(dim(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(dim("ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::new(r, c, &flat)
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(dim("matrix dimensions must be positive"));
        }
        if let Some(bad) = m.iter().find(|x| !x.is_finite()) {
            return Err(domain(format!("non-finite matrix entry {bad}")));
        }
        Ok(Mat(m))
    }

    /// Wraps without the finiteness scan. Callers guarantee the invariant.
    pub(crate) fn wrap(m: DMatrix<f64>) -> Self {
        debug_assert!(m.iter().all(|x| x.is_finite()));
        Mat(m)
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(1, 1, &[x])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "matrix dimensions must be positive");
        Mat(DMatrix::identity(n, n))
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(dim("empty diagonal"));
        }
        Self::from_dmatrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Mat {
        Mat(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Result<Mat> {
        Mat::from_dmatrix(&self.0 * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute entry of `self - self^T`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}{:?}", self.rows(), self.cols(), self.to_row_major())
    }
}

impl From<Mat> for DMatrix<f64> {
    fn from(m: Mat) -> Self {
        m.0
    }
}

// Arithmetic panics on shape mismatch, like nalgebra. Products of finite
// matrices may overflow, so results are rechecked only in debug builds.
impl<'a> Mul<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn mul(self, rhs: &'a Mat) -> Mat {
        Mat::wrap(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn add(self, rhs: &'a Mat) -> Mat {
        Mat::wrap(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn sub(self, rhs: &'a Mat) -> Mat {
        Mat::wrap(&self.0 - &rhs.0)
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        Mat(-&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(matches!(Mat::new(2, 2, &[1.0; 3]), Err(crate::Error::Dimension(_))));
        assert!(matches!(Mat::new(0, 2, &[]), Err(crate::Error::Dimension(_))));
        assert!(matches!(Mat::new(1, 1, &[f64::NAN]), Err(crate::Error::Domain(_))));
        assert!(matches!(Mat::new(1, 2, &[1.0, f64::INFINITY]), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn row_major_layout() {
        let m = Mat::new(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.to_row_major(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.transpose().get(2, 1), 6.0);
    }
}
