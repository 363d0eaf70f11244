use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::linalg::{controllability_matrix, controllability_rank, eigenvalues, numerical_rank};
use super::Mat;
use crate::error::{dim, domain, numerical, Result};

const PAIR_TOL: f64 = 1e-12;
const MAX_ATTEMPTS: usize = 10;
/// Relative spectrum tolerance accepted by [`place_poles`].
pub const PLACEMENT_TOL: f64 = 1e-6;

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= PAIR_TOL * (1.0 + z.norm())
}

/// Coefficients `[1, c_1, ..., c_n]` of the monic real polynomial with the given roots.
pub fn char_poly_from_eigs(lambdas: &[Complex64]) -> Result<Vec<f64>> {
    let mut used = vec![false; lambdas.len()];
    let mut poly = vec![1.0];
    for i in 0..lambdas.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = lambdas[i];
        let factor = if is_real(z) {
            vec![1.0, -z.re]
        } else {
            let partner = (0..lambdas.len())
                .filter(|&j| !used[j])
                .find(|&j| (lambdas[j] - z.conj()).norm() <= PAIR_TOL * (1.0 + z.norm()))
                .ok_or_else(|| domain(format!("eigenvalue {z} has no conjugate partner")))?;
            used[partner] = true;
            vec![1.0, -2.0 * z.re, z.norm_sqr()]
        };
        let mut next = vec![0.0; poly.len() + factor.len() - 1];
        for (i, &p) in poly.iter().enumerate() {
            for (j, &f) in factor.iter().enumerate() {
                next[i + j] += p * f;
            }
        }
        poly = next;
    }
    Ok(poly)
}

/// Largest distance between matched eigenvalues, matching greedily by
/// closest remaining pair. Returns infinity when the counts differ.
pub fn spectrum_mismatch(got: &[Complex64], want: &[Complex64]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    let mut g: Vec<Complex64> = got.to_vec();
    let mut w: Vec<Complex64> = want.to_vec();
    let mut worst = 0.0f64;
    while !w.is_empty() {
        let mut best = (0, 0, f64::INFINITY);
        for (i, a) in w.iter().enumerate() {
            for (j, b) in g.iter().enumerate() {
                let d = (a - b).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        worst = worst.max(best.2);
        w.swap_remove(best.0);
        g.swap_remove(best.1);
    }
    worst
}

/// Evaluates `phi(A) = A^n + c_1 A^{n-1} + ... + c_n I` by Horner's rule.
fn poly_of_matrix(a: &DMatrix<f64>, coeffs: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let mut acc = DMatrix::identity(n, n) * coeffs[0];
    for &c in &coeffs[1..] {
        acc = &acc * a + DMatrix::identity(n, n) * c;
    }
    acc
}

/// State feedback `K` (m x n) such that `A + B K` has the requested spectrum.
///
/// Multi-input systems are reduced to a single input `b = B v` with a random
/// direction `v`, then Ackermann's formula gives `K = -v e_n' C(A, b)^{-1} phi(A)`.
/// The achieved spectrum is verified; failed draws are retried with a fresh
/// `v` (deterministic sequence), at most ten times.
pub fn place_poles(a: &Mat, b: &Mat, lambdas: &[Complex64]) -> Result<Mat> {
    let n = a.rows();
    let m = b.cols();
    if !a.is_square() || b.rows() != n {
        return Err(dim("place_poles needs A n x n and B n x m"));
    }
    if lambdas.len() != n {
        return Err(dim(format!("need {n} eigenvalues, got {}", lambdas.len())));
    }
    let coeffs = char_poly_from_eigs(lambdas)?;
    if controllability_rank(a, b)? < n {
        return Err(domain("(A, B) is not controllable"));
    }
    let ad = a.as_dmatrix();
    let bd = b.as_dmatrix();
    let phi = poly_of_matrix(ad, &coeffs);
    let scale = lambdas.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut rng = ChaCha20Rng::seed_from_u64(0x706f_6c65);
    let mut last_err = f64::INFINITY;
    for attempt in 0..MAX_ATTEMPTS {
        let v = if m == 1 {
            DVector::from_element(1, 1.0)
        } else {
            DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng))
        };
        let b_tilde = bd * &v;
        let ctrb = controllability_matrix(ad, &DMatrix::from_column_slice(n, 1, b_tilde.as_slice()));
        if numerical_rank(&ctrb)? < n {
            continue;
        }
        let mut e_n = DVector::zeros(n);
        e_n[n - 1] = 1.0;
        let Some(x) = ctrb.transpose().lu().solve(&e_n) else {
            continue;
        };
        let k_row = -(x.transpose() * &phi);
        let k = &v * k_row;
        if k.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let k = Mat::wrap(k);
        let closed = Mat::wrap(ad + bd * k.as_dmatrix());
        let err = spectrum_mismatch(&eigenvalues(&closed)?, lambdas);
        if err <= PLACEMENT_TOL * scale {
            return Ok(k);
        }
        last_err = err;
        if m == 1 && attempt == 0 {
            break;
        }
    }
    Err(numerical(format!(
        "pole placement failed after retries (best spectrum error {last_err:.3e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(char_poly_from_eigs(&[c(0.5, 0.0), c(0.5, 0.0)]).unwrap(), vec![1.0, -1.0, 0.25]);
        assert_eq!(char_poly_from_eigs(&[c(0.0, 1.0), c(0.0, -1.0)]).unwrap(), vec![1.0, 0.0, 1.0]);
        assert_eq!(char_poly_from_eigs(&[c(0.3, 0.0)]).unwrap(), vec![1.0, -0.3]);
        assert!(matches!(char_poly_from_eigs(&[c(0.0, 1.0), c(0.5, 0.0)]), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn scalar_placement() {
        let k = place_poles(&Mat::scalar(0.9).unwrap(), &Mat::scalar(1.0).unwrap(), &[c(0.5, 0.0)]).unwrap();
        assert!((k.get(0, 0) + 0.4).abs() < 1e-14);
    }

    #[test]
    fn double_integrator_placement() {
        let a = Mat::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let b = Mat::new(2, 1, &[0.0, 1.0]).unwrap();
        let k = place_poles(&a, &b, &[c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        assert!((k.get(0, 0) + 0.25).abs() < 1e-12);
        assert!((k.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn existing_spectrum() {
        let a = Mat::diag(&[0.2, -0.4]).unwrap();
        let b = Mat::new(2, 2, &[1.0, 0.3, -0.2, 1.0]).unwrap();
        let k = place_poles(&a, &b, &[c(0.2, 0.0), c(-0.4, 0.0)]).unwrap();
        let got = eigenvalues(&(&a + &(&b * &k))).unwrap();
        assert!(spectrum_mismatch(&got, &[c(0.2, 0.0), c(-0.4, 0.0)]) < 1e-6);
    }

    #[test]
    fn uncontrollable_is_domain_error() {
        let b = Mat::new(2, 1, &[1.0, 0.0]).unwrap();
        let err = place_poles(&Mat::identity(2), &b, &[c(0.1, 0.0), c(0.2, 0.0)]).unwrap_err();
        assert!(matches!(err, crate::Error::Domain(_)));
    }

    #[test]
    fn mismatch_is_order_free() {
        let a = [c(0.1, 0.2), c(0.1, -0.2), c(0.5, 0.0)];
        let b = [c(0.5, 0.0), c(0.1, -0.2), c(0.1, 0.2)];
        assert_eq!(spectrum_mismatch(&a, &b), 0.0);
        assert_eq!(spectrum_mismatch(&a, &b[..2]), f64::INFINITY);
    }
}
