//! Closed-form bounds on the second moment of the REINFORCE estimator.
//!
//! The upper bound is the explicit polynomial-coefficient bound times the
//! eighth moment of a chi variable:
//!
//! ```text
//! p_bar = 4 ||Sigma_a^{-1}|| mu^2 H'^2 (r sa^2 H + mu^2 (q + 2 r k^2)(H' |s1|^2 + sigma^2 H H'^2))^2 (|s1| + sigma H)^2
//! bound = p_bar * nb (nb + 2)(nb + 4)(nb + 6),   nb = max(n, m)
//! ```
//!
//! with `sigma = ||Sigma_s^{1/2}|| + ||B|| ||Sigma_a^{1/2}||`,
//! `H' = min(H, 1 / (1 - rho(A + BK)))` and `mu` the transient constant of
//! `A + BK` certified over powers `0..=H`.

use crate::ctrlmath::{operator_norm, transient_bound_mu, transient_bound_mu_with, TransientBound};
use crate::error::{dim, domain, Result};
use crate::lqrmodel::{validate, violations_to_error, GaussianPolicy, LqrProblem};

/// Operator norms entering the upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemNorms {
    pub q: f64,
    pub r: f64,
    pub k: f64,
    pub b: f64,
    /// `||Sigma_s^{1/2}||`
    pub sigma_s: f64,
    /// `||Sigma_a^{1/2}||`
    pub sigma_a: f64,
    /// `||Sigma_a^{-1}||`
    pub inv_sigma_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundReport {
    pub bound: f64,
    pub p_bar: f64,
    pub moment_factor: f64,
    pub mu: f64,
    /// Spectral radius of the closed loop.
    pub rho: f64,
    pub h_prime: f64,
    pub sigma: f64,
    /// `mu^2 ||Sigma_a^{-1/2}|| (|s1| + sigma H) H'`
    pub c1: f64,
    /// `||R|| ||Sigma_a|| H + mu^2 (||Q|| + ||R|| ||K||^2)(|s1|^2 + sigma^2 H) H'^2`
    pub c2: f64,
    pub norms: ProblemNorms,
    pub n_bar: usize,
}

/// `min(H, 1 / (1 - x))` for `x < 1`, without forming an infinite intermediate.
pub fn capped_horizon(horizon: usize, x: f64) -> f64 {
    let h = horizon as f64;
    let gap = 1.0 - x;
    if gap * h <= 1.0 {
        h
    } else {
        1.0 / gap
    }
}

/// `E[X^8] = n(n+2)(n+4)(n+6)` for `X ~ chi(n)`.
pub fn chi_eighth_moment(n: usize) -> f64 {
    let n = n as f64;
    n * (n + 2.0) * (n + 4.0) * (n + 6.0)
}

/// Everything in the upper bound that does not depend on the initial state.
#[derive(Debug, Clone)]
pub struct UpperBoundContext {
    transient: TransientBound,
    norms: ProblemNorms,
    horizon: usize,
    n_bar: usize,
}

impl UpperBoundContext {
    pub fn new(p: &LqrProblem, pol: &GaussianPolicy) -> Result<Self> {
        violations_to_error(&validate(p, pol))?;
        let closed = p.closed_loop(&pol.k)?;
        let transient = match transient_bound_mu(&closed, p.horizon.max(1)) {
            Ok(t) => t,
            Err(crate::Error::Domain(msg)) if msg.starts_with("unstable") => {
                return Err(domain(format!("upper-bound hypothesis violated: {msg}")))
            }
            // Nilpotent closed loop: use the clamped-radius fallback.
            Err(crate::Error::Domain(_)) => transient_bound_mu_with(&closed, p.horizon.max(1), true)?,
            Err(e) => return Err(e),
        };
        let inv = crate::ctrlmath::spd_inverse(pol.sigma_a.as_dmatrix())?;
        let norms = ProblemNorms {
            q: operator_norm(&p.q)?,
            r: operator_norm(&p.r)?,
            k: operator_norm(&pol.k)?,
            b: operator_norm(&p.b)?,
            sigma_s: operator_norm(&p.sigma_s)?.sqrt(),
            sigma_a: operator_norm(&pol.sigma_a)?.sqrt(),
            inv_sigma_a: crate::ctrlmath::operator_norm_raw(&inv)?,
        };
        Ok(UpperBoundContext {
            transient,
            norms,
            horizon: p.horizon,
            n_bar: p.n().max(p.m()),
        })
    }

    pub fn transient(&self) -> &TransientBound {
        &self.transient
    }

    pub fn evaluate(&self, s1: &[f64]) -> Result<UpperBoundReport> {
        let s1_norm = s1.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.evaluate_norm(s1_norm)
    }

    /// Bound as a function of `||s1||` only.
    pub fn evaluate_norm(&self, s1_norm: f64) -> Result<UpperBoundReport> {
        if !(s1_norm >= 0.0) || !s1_norm.is_finite() {
            return Err(domain("initial-state norm must be finite and nonnegative"));
        }
        let nm = self.norms;
        let h = self.horizon as f64;
        let mu = self.transient.mu;
        let rho = self.transient.rho;
        let hp = capped_horizon(self.horizon, rho);
        let sigma = nm.sigma_s + nm.b * nm.sigma_a;
        let inner = nm.r * nm.sigma_a * nm.sigma_a * h
            + mu * mu * (nm.q + 2.0 * nm.r * nm.k * nm.k) * (hp * s1_norm * s1_norm + sigma * sigma * h * hp * hp);
        let outer = s1_norm + sigma * h;
        let p_bar = 4.0 * nm.inv_sigma_a * mu * mu * hp * hp * inner * inner * outer * outer;
        let moment_factor = chi_eighth_moment(self.n_bar);
        let c1 = mu * mu * nm.inv_sigma_a.sqrt() * outer * hp;
        let c2 = nm.r * nm.sigma_a * nm.sigma_a * h
            + mu * mu * (nm.q + nm.r * nm.k * nm.k) * (s1_norm * s1_norm + sigma * sigma * h) * hp * hp;
        Ok(UpperBoundReport {
            bound: p_bar * moment_factor,
            p_bar,
            moment_factor,
            mu,
            rho,
            h_prime: hp,
            sigma,
            c1,
            c2,
            norms: nm,
            n_bar: self.n_bar,
        })
    }
}

/// Upper bound on `E[tr(g'g)]` at initial state `s1`.
///
/// Requires `rho(A + BK) < 1`.
pub fn upper_bound(p: &LqrProblem, pol: &GaussianPolicy, s1: &[f64]) -> Result<UpperBoundReport> {
    if s1.len() != p.n() {
        return Err(dim(format!("s1 has length {}, expected {}", s1.len(), p.n())));
    }
    UpperBoundContext::new(p, pol)?.evaluate(s1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLowerBoundReport {
    /// Nominal `c1^2 c2^2` (unit constant).
    pub bound: f64,
    pub c1: f64,
    pub c2: f64,
    /// `min(H, 1 / (1 - (a + bk)^2))`
    pub h_prime_sq: f64,
    pub closed_loop: f64,
}

/// Scalar parameters of a one-dimensional problem. `sigma_s`, `sigma_a` are
/// standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarParams {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub q: f64,
    pub r: f64,
    pub sigma_s: f64,
    pub sigma_a: f64,
    pub s1: f64,
    pub horizon: usize,
}

impl ScalarParams {
    /// Reads a 1x1 problem; covariances become standard deviations.
    pub fn from_problem(p: &LqrProblem, pol: &GaussianPolicy, s1: f64) -> Result<Self> {
        if p.n() != 1 || p.m() != 1 {
            return Err(dim("scalar parameters need n = m = 1"));
        }
        Ok(ScalarParams {
            a: p.a.get(0, 0),
            b: p.b.get(0, 0),
            k: pol.k.get(0, 0),
            q: p.q.get(0, 0),
            r: p.r.get(0, 0),
            sigma_s: p.sigma_s.get(0, 0).max(0.0).sqrt(),
            sigma_a: pol.sigma_a.get(0, 0).max(0.0).sqrt(),
            s1,
            horizon: p.horizon,
        })
    }
}

/// Scalar lower-bound constants `c1`, `c2` for `0 <= a + bk < 1`.
///
/// `sigma = sigma_s + |b| sigma_a`, `h' = min(H, 1/(1 - (a+bk)^2))`,
/// `c1 = (|s1| + sigma sqrt(H)) sqrt(h') / sigma_a`,
/// `c2 = r sigma_a^2 H + (q + r k^2)(s1^2 + sigma^2 H) h'`.
pub fn lower_bound_scalar(sp: &ScalarParams) -> Result<ScalarLowerBoundReport> {
    let f = sp.a + sp.b * sp.k;
    if !(0.0..1.0).contains(&f) {
        return Err(domain(format!("lower-bound hypothesis violated: a + bk = {f} is outside [0, 1)")));
    }
    if !(sp.sigma_a > 0.0) {
        return Err(domain("sigma_a must be positive"));
    }
    if sp.horizon == 0 {
        return Err(domain("horizon must be positive"));
    }
    let h = sp.horizon as f64;
    let hp = capped_horizon(sp.horizon, f * f);
    let sigma = sp.sigma_s + sp.b.abs() * sp.sigma_a;
    let c1 = (sp.s1.abs() + sigma * h.sqrt()) * hp.sqrt() / sp.sigma_a;
    let c2 = sp.r * sp.sigma_a * sp.sigma_a * h + (sp.q + sp.r * sp.k * sp.k) * (sp.s1 * sp.s1 + sigma * sigma * h) * hp;
    Ok(ScalarLowerBoundReport {
        bound: c1 * c1 * c2 * c2,
        c1,
        c2,
        h_prime_sq: hp,
        closed_loop: f,
    })
}
