//! LQR problem and linear-Gaussian policy types, validation, and the
//! closed-form second-moment recursion used as an analytic oracle.

mod format;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::ctrlmath::{is_symmetric_pd, is_symmetric_psd, Mat};
use crate::error::{dim, domain, Result};

pub use format::{parse_problem, write_problem, ProblemFile};

/// Stochastic LQR instance: `s' = A s + B a + eps_s`, reward `-(s'Qs + a'Ra)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrProblem {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
    pub sigma_s: Mat,
    pub horizon: usize,
}

/// Linear-Gaussian policy `a = K s + eps_a`, `eps_a ~ N(0, sigma_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub k: Mat,
    pub sigma_a: Mat,
}

impl LqrProblem {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    /// Closed-loop matrix `A + B K`.
    pub fn closed_loop(&self, k: &Mat) -> Result<Mat> {
        if k.rows() != self.m() || k.cols() != self.n() {
            return Err(dim(format!("K must be {}x{}, got {}x{}", self.m(), self.n(), k.rows(), k.cols())));
        }
        Ok(&self.a + &(&self.b * k))
    }
}

/// Machine-readable violation codes reported by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    DimMismatch,
    BadHorizon,
    QNotPsd,
    RNotPd,
    SigmaSNotPsd,
    SigmaANotPd,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::DimMismatch => "DIM_MISMATCH",
            ViolationCode::BadHorizon => "BAD_HORIZON",
            ViolationCode::QNotPsd => "Q_NOT_PSD",
            ViolationCode::RNotPd => "R_NOT_PD",
            ViolationCode::SigmaSNotPsd => "SIGMA_S_NOT_PSD",
            ViolationCode::SigmaANotPd => "SIGMA_A_NOT_PD",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
}

fn shape_is(m: &Mat, rows: usize, cols: usize) -> bool {
    m.rows() == rows && m.cols() == cols
}

fn check_problem(p: &LqrProblem, out: &mut Vec<Violation>) -> bool {
    let n = p.a.rows();
    let m = p.b.cols();
    let mut push = |code, detail: String| out.push(Violation { code, detail });
    let mut shapes_ok = true;
    if !p.a.is_square() {
        push(ViolationCode::DimMismatch, format!("A is {}x{}", p.a.rows(), p.a.cols()));
        shapes_ok = false;
    }
    for (name, mat, rows, cols) in [
        ("B", &p.b, n, m),
        ("Q", &p.q, n, n),
        ("R", &p.r, m, m),
        ("sigma_s", &p.sigma_s, n, n),
    ] {
        if !shape_is(mat, rows, cols) {
            push(
                ViolationCode::DimMismatch,
                format!("{name} is {}x{}, expected {rows}x{cols}", mat.rows(), mat.cols()),
            );
            shapes_ok = false;
        }
    }
    if p.horizon == 0 {
        push(ViolationCode::BadHorizon, "horizon must be positive".into());
    }
    if shape_is(&p.q, n, n) && !is_symmetric_psd(&p.q).unwrap_or(false) {
        push(ViolationCode::QNotPsd, "Q is not symmetric PSD".into());
    }
    if shape_is(&p.r, m, m) && !is_symmetric_pd(&p.r).unwrap_or(false) {
        push(ViolationCode::RNotPd, "R is not symmetric PD".into());
    }
    if shape_is(&p.sigma_s, n, n) && !is_symmetric_psd(&p.sigma_s).unwrap_or(false) {
        push(ViolationCode::SigmaSNotPsd, "sigma_s is not symmetric PSD".into());
    }
    shapes_ok
}

/// Every invariant violation of the problem/policy pair. Empty means valid.
pub fn validate(p: &LqrProblem, pol: &GaussianPolicy) -> Vec<Violation> {
    let mut out = Vec::new();
    check_problem(p, &mut out);
    let (n, m) = (p.n(), p.m());
    if !shape_is(&pol.k, m, n) {
        out.push(Violation {
            code: ViolationCode::DimMismatch,
            detail: format!("K is {}x{}, expected {m}x{n}", pol.k.rows(), pol.k.cols()),
        });
    }
    if !shape_is(&pol.sigma_a, m, m) {
        out.push(Violation {
            code: ViolationCode::DimMismatch,
            detail: format!("sigma_a is {}x{}, expected {m}x{m}", pol.sigma_a.rows(), pol.sigma_a.cols()),
        });
    } else if !is_symmetric_pd(&pol.sigma_a).unwrap_or(false) {
        out.push(Violation {
            code: ViolationCode::SigmaANotPd,
            detail: "sigma_a is not symmetric PD".into(),
        });
    }
    out
}

pub(crate) fn violations_to_error(v: &[Violation]) -> Result<()> {
    if v.is_empty() {
        return Ok(());
    }
    let codes: Vec<String> = v.iter().map(|x| format!("{} ({})", x.code, x.detail)).collect();
    Err(domain(format!("invalid problem: {}", codes.join(", "))))
}

/// Validates the problem alone plus the shape of a gain matrix.
pub(crate) fn check_problem_and_gain(p: &LqrProblem, k: &Mat) -> Result<()> {
    let mut out = Vec::new();
    check_problem(p, &mut out);
    if !shape_is(k, p.m(), p.n()) {
        out.push(Violation {
            code: ViolationCode::DimMismatch,
            detail: format!("K is {}x{}, expected {}x{}", k.rows(), k.cols(), p.m(), p.n()),
        });
    }
    violations_to_error(&out)
}

/// Per-step state second moments and the exact expected return.
#[derive(Debug, Clone)]
pub struct MomentTrace {
    /// `E[s_t s_t']` for `t = 1..=H`.
    pub second_moments: Vec<Mat>,
    pub expected_return: f64,
}

/// Exact second moments under the policy from a fixed initial state.
///
/// With `M = A + BK` and `N = sigma_s + B sigma_a B'`, `S_1 = s1 s1'` and
/// `S_{t+1} = M S_t M' + N`. The return is
/// `-sum_t [tr(Q S_t) + tr(R (K S_t K' + sigma_a))]`.
pub fn exact_moments(p: &LqrProblem, pol: &GaussianPolicy, s1: &[f64]) -> Result<MomentTrace> {
    violations_to_error(&validate(p, pol))?;
    exact_moments_unchecked(p, pol, s1)
}

pub(crate) fn exact_moments_unchecked(p: &LqrProblem, pol: &GaussianPolicy, s1: &[f64]) -> Result<MomentTrace> {
    if s1.len() != p.n() {
        return Err(dim(format!("s1 has length {}, expected {}", s1.len(), p.n())));
    }
    let closed = p.closed_loop(&pol.k)?;
    let m = closed.as_dmatrix();
    let b = p.b.as_dmatrix();
    let k = pol.k.as_dmatrix();
    let sa = pol.sigma_a.as_dmatrix();
    let noise = p.sigma_s.as_dmatrix() + b * sa * b.transpose();
    let x = DVector::from_column_slice(s1);
    let mut s: DMatrix<f64> = &x * x.transpose();
    let q = p.q.as_dmatrix();
    let r = p.r.as_dmatrix();
    let action_noise_cost = (r * sa).trace();
    let mut total = 0.0;
    let mut moments = Vec::with_capacity(p.horizon);
    for t in 0..p.horizon {
        if t > 0 {
            let next = m * &s * m.transpose() + &noise;
            s = (&next + next.transpose()) * 0.5;
        }
        total -= (q * &s).trace() + (r * (k * &s * k.transpose())).trace() + action_noise_cost;
        moments.push(Mat::from_dmatrix(s.clone())?);
    }
    if !total.is_finite() {
        return Err(crate::error::numerical("expected return overflowed"));
    }
    Ok(MomentTrace {
        second_moments: moments,
        expected_return: total,
    })
}

/// Exact `J = E[sum_t r_t]` from a fixed initial state.
pub fn exact_return(p: &LqrProblem, pol: &GaussianPolicy, s1: &[f64]) -> Result<f64> {
    Ok(exact_moments(p, pol, s1)?.expected_return)
}
