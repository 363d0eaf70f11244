//! Transient growth of matrix powers: the constant `mu` with
//! `||M^k|| <= mu * rho(M)^k`, plus a grid estimate of the resolvent
//! condition `sup_{|z|>1} (|z| - 1) ||(zI - M)^{-1}||`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::{operator_norm_raw, spectral_radius};
use super::Mat;
use crate::error::{dim, domain, numerical, Result};

/// Spectral radius below which the power-ratio quotient is treated as undefined.
pub const NILPOTENT_RHO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransientBound {
    pub mu: f64,
    /// Spectral radius of the matrix (clamped to [`NILPOTENT_RHO`] in the nilpotent fallback).
    pub rho: f64,
    /// Largest power the bound is certified for.
    pub k_max: usize,
    /// Grid estimate of the resolvent condition; diagnostic only.
    pub resolvent_estimate: f64,
}

impl TransientBound {
    /// `2 e n r(M)`, the classical all-powers bound implied by the resolvent estimate.
    pub fn resolvent_mu_estimate(&self, n: usize) -> f64 {
        2.0 * std::f64::consts::E * n as f64 * self.resolvent_estimate
    }
}

/// Certifies `||m^k|| <= mu * rho^k` for every `k` in `0..=k_max` by
/// direct multiplication.
///
/// Rejects unstable matrices and (nilpotent-like) matrices whose spectral
/// radius is below [`NILPOTENT_RHO`].
pub fn transient_bound_mu(m: &Mat, k_max: usize) -> Result<TransientBound> {
    transient_bound_mu_with(m, k_max, false)
}

/// Same as [`transient_bound_mu`]. With `allow_nilpotent`, a spectral radius
/// below [`NILPOTENT_RHO`] is clamped to it and `mu` becomes `max_k ||m^k||`.
pub fn transient_bound_mu_with(m: &Mat, k_max: usize, allow_nilpotent: bool) -> Result<TransientBound> {
    if !m.is_square() {
        return Err(dim("transient bound needs a square matrix"));
    }
    if k_max < 1 {
        return Err(domain("k_max must be at least 1"));
    }
    let rho = spectral_radius(m)?;
    if rho >= 1.0 {
        return Err(domain(format!("unstable closed loop (spectral radius {rho})")));
    }
    let nilpotent = rho < NILPOTENT_RHO;
    if nilpotent && !allow_nilpotent {
        return Err(domain("spectral radius is numerically zero; the power-ratio bound is undefined"));
    }
    let md = m.as_dmatrix();
    let mut power = DMatrix::identity(m.rows(), m.rows());
    let mut mu = 1.0f64;
    let mut rho_k = 1.0f64;
    for _ in 1..=k_max {
        power = &power * md;
        let norm = operator_norm_raw(&power)?;
        if nilpotent {
            mu = mu.max(norm);
        } else {
            rho_k *= rho;
            let ratio = norm / rho_k;
            if !ratio.is_finite() {
                return Err(numerical("power ratio overflowed"));
            }
            mu = mu.max(ratio);
        }
    }
    let resolvent_estimate = resolvent_condition(m, &default_radii(), 48)?;
    Ok(TransientBound {
        mu,
        rho: if nilpotent { NILPOTENT_RHO } else { rho },
        k_max,
        resolvent_estimate,
    })
}

/// Radii `1 + d` with `d` log-spaced over `[1e-3, 1e2]`.
pub fn default_radii() -> Vec<f64> {
    (0..24).map(|i| 1.0 + 10f64.powf(-3.0 + 5.0 * i as f64 / 23.0)).collect()
}

/// Grid maximum of `(|z| - 1) ||(zI - m)^{-1}||` over `z = r e^{i theta}`.
///
/// Uses `angles_per_radius` angles in `[0, pi]`; the lower half plane mirrors
/// the upper one for real matrices. The result underestimates the supremum.
pub fn resolvent_condition(m: &Mat, radii: &[f64], angles_per_radius: usize) -> Result<f64> {
    if !m.is_square() {
        return Err(dim("resolvent condition needs a square matrix"));
    }
    if radii.iter().any(|&r| !(r > 1.0)) {
        return Err(domain("resolvent radii must exceed 1"));
    }
    if angles_per_radius == 0 {
        return Err(domain("need at least one angle per radius"));
    }
    let n = m.rows();
    let mc: DMatrix<Complex64> = m.as_dmatrix().map(|x| Complex64::new(x, 0.0));
    let mut best = 0.0f64;
    for &radius in radii {
        for j in 0..angles_per_radius {
            let theta = if angles_per_radius == 1 {
                0.0
            } else {
                std::f64::consts::PI * j as f64 / (angles_per_radius - 1) as f64
            };
            let z = Complex64::from_polar(radius, theta);
            let shifted = DMatrix::<Complex64>::identity(n, n) * z - &mc;
            let svd = shifted
                .try_svd(false, false, f64::EPSILON, 1000 * n.max(10))
                .ok_or_else(|| numerical("complex SVD did not converge"))?;
            let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
            if !(smin > 0.0) {
                return Err(numerical("zI - M is singular on the resolvent grid"));
            }
            best = best.max((radius - 1.0) / smin);
        }
    }
    Ok(best)
}
