use nalgebra::DMatrix;

use super::linalg::{controllability_rank, operator_norm_raw, spd_inverse, spectral_radius};
use super::Mat;
use crate::error::{dim, domain, numerical, Result};

const REL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;

/// Stabilizing solution of the discrete algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct DareSolution {
    /// Cost-to-go matrix.
    pub p: Mat,
    /// Optimal gain for the `a = K s` convention (note: no leading minus).
    pub k_star: Mat,
    /// Operator norm of the Riccati equation residual at `p`.
    pub residual: f64,
    pub iterations: usize,
}

fn riccati_step(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let at_p = a.transpose() * p;
    let bt_p = b.transpose() * p;
    let gram = r + &bt_p * b;
    let gain = spd_inverse(&gram)? * (&bt_p * a);
    let next = q + &at_p * a - (&at_p * b) * &gain;
    Ok(((&next + next.transpose()) * 0.5, -gain))
}

/// Solves `P = Q + A'PA - A'PB (R + B'PB)^{-1} B'PA` by value iteration from `P = Q`.
///
/// Iterates until the relative Frobenius change drops to `1e-12`, capped at
/// `10^6` sweeps. The returned gain is `K* = -(R + B'PB)^{-1} B'PA`.
pub fn solve_dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<DareSolution> {
    let n = a.rows();
    let m = b.cols();
    if !a.is_square() || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m {
        return Err(dim(format!(
            "incompatible DARE shapes: A {}x{}, B {}x{}, Q {}x{}, R {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            q.rows(),
            q.cols(),
            r.rows(),
            r.cols()
        )));
    }
    if controllability_rank(a, b)? < n {
        return Err(domain("(A, B) is not controllable"));
    }
    let (ad, bd, qd, rd) = (a.as_dmatrix(), b.as_dmatrix(), q.as_dmatrix(), r.as_dmatrix());
    let mut p = (qd + qd.transpose()) * 0.5;
    let mut iterations = 0;
    loop {
        if iterations >= MAX_ITER {
            return Err(numerical(format!("Riccati iteration did not converge in {MAX_ITER} sweeps")));
        }
        let (next, _) = riccati_step(ad, bd, qd, rd, &p)?;
        iterations += 1;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(numerical("Riccati iteration overflowed"));
        }
        let change = (&next - &p).norm();
        let size = next.norm();
        p = next;
        if change <= REL_TOL * size || (size == 0.0 && change == 0.0) {
            break;
        }
    }
    let (next, k) = riccati_step(ad, bd, qd, rd, &p)?;
    let residual = operator_norm_raw(&(&p - &next))?;
    let k_star = Mat::from_dmatrix(k)?;
    let closed = Mat::wrap(ad + bd * k_star.as_dmatrix());
    if spectral_radius(&closed)? >= 1.0 {
        return Err(numerical("Riccati fixed point does not stabilize the closed loop"));
    }
    Ok(DareSolution {
        p: Mat::from_dmatrix(p)?,
        k_star,
        residual,
        iterations,
    })
}

/// Operator norm of the Riccati residual of an arbitrary candidate `P`.
pub fn riccati_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<f64> {
    let (next, _) = riccati_step(a.as_dmatrix(), b.as_dmatrix(), q.as_dmatrix(), r.as_dmatrix(), p.as_dmatrix())?;
    operator_norm_raw(&(p.as_dmatrix() - next))
}
