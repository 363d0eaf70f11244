//! Random LQR problems and eigenvalue prototypes.
//!
//! `A` and `B` have i.i.d. `N(0, 1/n)` and `N(0, 1/m)` entries. Cost and
//! noise matrices are Wishart(`k^{-1} I`, k) draws `X'X` with `X` i.i.d.
//! `N(0, 1/k)`, normalized so that `E[x'Qx] = 1` for `x ~ N(0, k^{-1} I)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::ctrlmath::{controllability_rank, solve_dare, Mat};
use crate::error::{domain, Result};
use crate::lqrmodel::{GaussianPolicy, LqrProblem};
use crate::rollout::{standard_normals, RngKey, StreamContext};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRecipe {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub sigma_s_scale: f64,
    pub sigma_a_scale: f64,
    pub seed: u64,
}

impl ProblemRecipe {
    pub fn check(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.horizon == 0 {
            return Err(domain("n, m and horizon must be at least 1"));
        }
        if !(self.sigma_s_scale > 0.0 && self.sigma_a_scale > 0.0) {
            return Err(domain("noise scales must be positive"));
        }
        Ok(())
    }

    /// One-line description for file headers.
    pub fn describe(&self) -> String {
        format!(
            "recipe n={} m={} horizon={} sigma_s_scale={} sigma_a_scale={} seed={}",
            self.n, self.m, self.horizon, self.sigma_s_scale, self.sigma_a_scale, self.seed
        )
    }
}

const MAX_RESAMPLE: u64 = 5;

fn gaussian_matrix(key: RngKey, rows: usize, cols: usize, std: f64) -> DMatrix<f64> {
    let vals = standard_normals(&mut key.rng(), rows * cols);
    DMatrix::from_row_slice(rows, cols, &vals) * std
}

/// `X'X` with `X` a `k x k` matrix of i.i.d. `N(0, 1/k)` entries.
pub fn wishart_psd(k: usize, key: RngKey) -> Result<Mat> {
    if k == 0 {
        return Err(domain("Wishart dimension must be at least 1"));
    }
    let x = gaussian_matrix(key, k, k, (k as f64).powf(-0.5));
    let q = x.transpose() * &x;
    Mat::from_dmatrix((&q + q.transpose()) * 0.5)
}

/// Random problem plus a policy at the infinite-horizon optimal gain.
///
/// Components are drawn from `key(seed, Problem, attempt, component)`, so
/// the same recipe always yields the same problem. Pairs `(A, B)` that fail
/// the numerical controllability test are redrawn up to five times.
pub fn random_lqr(recipe: &ProblemRecipe) -> Result<(LqrProblem, GaussianPolicy)> {
    recipe.check()?;
    let (n, m) = (recipe.n, recipe.m);
    let base = RngKey::new(recipe.seed, StreamContext::Problem);
    for attempt in 0..MAX_RESAMPLE {
        let key = |component: u64| base.with_s1(attempt).with_trajectory(component);
        let a = Mat::from_dmatrix(gaussian_matrix(key(0), n, n, (n as f64).powf(-0.5)))?;
        let b = Mat::from_dmatrix(gaussian_matrix(key(1), n, m, (m as f64).powf(-0.5)))?;
        if controllability_rank(&a, &b)? < n {
            continue;
        }
        let q = wishart_psd(n, key(2))?;
        let r = wishart_psd(m, key(3))?;
        let sigma_s = wishart_psd(n, key(4))?.scale(recipe.sigma_s_scale)?;
        let sigma_a = wishart_psd(m, key(5))?.scale(recipe.sigma_a_scale)?;
        let k_star = solve_dare(&a, &b, &q, &r)?.k_star;
        let problem = LqrProblem {
            a,
            b,
            q,
            r,
            sigma_s,
            horizon: recipe.horizon,
        };
        return Ok((problem, GaussianPolicy { k: k_star, sigma_a }));
    }
    Err(domain(format!("no controllable (A, B) after {MAX_RESAMPLE} draws")))
}

/// Conjugate-closed set of `n` eigenvalues inside the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPrototype {
    pub lambdas: Vec<Complex64>,
    pub seed: u64,
}

impl EigPrototype {
    pub fn max_modulus(&self) -> f64 {
        self.lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rescaled so the largest modulus is exactly one.
    pub fn normalized(&self) -> Result<EigPrototype> {
        let top = self.max_modulus();
        if !(top > 0.0) {
            return Err(domain("cannot normalize an all-zero prototype"));
        }
        Ok(EigPrototype {
            lambdas: self.lambdas.iter().map(|z| z / top).collect(),
            seed: self.seed,
        })
    }
}

/// `floor(n/2)` conjugate pairs `r e^{+-i phi}` with `r ~ U[0,1]`,
/// `phi ~ U[0, pi)`, then real eigenvalues from `U[-1, 1]` to make up `n`.
pub fn eig_prototype(n: usize, key: RngKey) -> EigPrototype {
    let mut rng = key.with_context(StreamContext::Prototype).rng();
    let mut lambdas = Vec::with_capacity(n);
    for _ in 0..n / 2 {
        let r: f64 = rng.random_range(0.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let z = Complex64::from_polar(r, phi);
        lambdas.push(z);
        lambdas.push(z.conj());
    }
    while lambdas.len() < n {
        lambdas.push(Complex64::new(rng.random_range(-1.0..=1.0), 0.0));
    }
    EigPrototype { lambdas, seed: key.seed }
}

/// Every eigenvalue multiplied by `rho`.
pub fn scale_prototype(proto: &EigPrototype, rho: f64) -> Result<Vec<Complex64>> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain("rho must be finite and nonnegative"));
    }
    Ok(proto.lambdas.iter().map(|z| z * rho).collect())
}
