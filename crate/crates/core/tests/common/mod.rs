#![allow(dead_code)]

use lqrpg::ctrlmath::{spectral_radius, Mat};
use lqrpg::probgen::{random_lqr, ProblemRecipe};
use lqrpg::rollout::{standard_normals, RngKey, StreamContext};
use lqrpg::{GaussianPolicy, LqrProblem};

pub fn key(seed: u64) -> RngKey {
    RngKey::new(seed, StreamContext::Problem)
}

pub fn gaussian(seed: u64, rows: usize, cols: usize) -> Mat {
    let vals = standard_normals(&mut key(seed).with_s1(0xfeed).rng(), rows * cols);
    Mat::new(rows, cols, &vals).unwrap()
}

pub fn uniform(seed: u64, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    key(seed).with_s1(0xabc).rng().random_range(lo..hi)
}

/// Gaussian matrix rescaled to spectral radius `rho`.
pub fn with_radius(seed: u64, n: usize, rho: f64) -> Mat {
    let g = gaussian(seed, n, n);
    let r = spectral_radius(&g).unwrap();
    g.scale(rho / r).unwrap()
}

pub fn problem(seed: u64, n: usize, m: usize, horizon: usize) -> (LqrProblem, GaussianPolicy) {
    random_lqr(&ProblemRecipe {
        n,
        m,
        horizon,
        sigma_s_scale: 1.0,
        sigma_a_scale: 1.0,
        seed,
    })
    .unwrap()
}

pub fn scalar(a: f64, b: f64, q: f64, r: f64, sigma_s: f64, horizon: usize) -> LqrProblem {
    let s = |x| Mat::scalar(x).unwrap();
    LqrProblem {
        a: s(a),
        b: s(b),
        q: s(q),
        r: s(r),
        sigma_s: s(sigma_s),
        horizon,
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
