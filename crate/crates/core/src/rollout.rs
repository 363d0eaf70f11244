//! Trajectory simulation with keyed, parallelism-independent randomness.
//!
//! Every trajectory draws from its own ChaCha20 stream keyed by
//! `(seed, context, s1_index, trajectory_index)`. Within a trajectory the
//! unit Gaussians are consumed in the order `delta_a_1, delta_s_1,
//! delta_a_2, delta_s_2, ...` (no state noise after the last step, since
//! `s_{H+1}` is never formed).

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ctrlmath::{is_symmetric_psd, psd_sqrt, Mat};
use crate::error::{dim, domain, Result};
use crate::lqrmodel::{check_problem_and_gain, GaussianPolicy, LqrProblem};

/// Which part of an experiment a random stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum StreamContext {
    Rollout = 1,
    InitialState = 2,
    Evaluation = 3,
    Problem = 4,
    Perturbation = 5,
    Prototype = 6,
    Training = 7,
    TrainingInitialState = 8,
}

/// Address of an independent random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub context: StreamContext,
    pub s1_index: u64,
    pub trajectory_index: u64,
}

impl RngKey {
    pub fn new(seed: u64, context: StreamContext) -> Self {
        RngKey {
            seed,
            context,
            s1_index: 0,
            trajectory_index: 0,
        }
    }

    pub fn with_context(self, context: StreamContext) -> Self {
        RngKey { context, ..self }
    }

    pub fn with_s1(self, s1_index: u64) -> Self {
        RngKey { s1_index, ..self }
    }

    pub fn with_trajectory(self, trajectory_index: u64) -> Self {
        RngKey {
            trajectory_index,
            ..self
        }
    }

    /// Fresh generator positioned at the start of this substream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..12].copy_from_slice(&(self.context as u32).to_le_bytes());
        key[16..24].copy_from_slice(&self.s1_index.to_le_bytes());
        key[24..32].copy_from_slice(&self.trajectory_index.to_le_bytes());
        ChaCha20Rng::from_seed(key)
    }
}

/// Draws `n` unit Gaussians from the stream.
pub fn standard_normals(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Sample from `N(0, scale^2 I_n)` using the keyed stream.
pub fn isotropic_gaussian(key: RngKey, n: usize, scale: f64) -> Vec<f64> {
    let mut rng = key.rng();
    standard_normals(&mut rng, n).into_iter().map(|x| x * scale).collect()
}

/// One rollout `s_1, a_1, ..., s_H, a_H` with its rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    /// `eps_a_t = a_t - K s_t`, stored exactly as drawn.
    pub action_noise: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub total_return: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.rewards.len()
    }

    /// One row per step: `t, s0.., a0.., eps_a0.., reward`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.actions.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("s{i}")));
        header.extend((0..m).map(|i| format!("a{i}")));
        header.extend((0..m).map(|i| format!("eps_a{i}")));
        header.push("reward".into());
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.horizon() {
            let mut row = vec![(t + 1).to_string()];
            row.extend(self.states[t].iter().map(|x| format!("{x:e}")));
            row.extend(self.actions[t].iter().map(|x| format!("{x:e}")));
            row.extend(self.action_noise[t].iter().map(|x| format!("{x:e}")));
            row.push(format!("{:e}", self.rewards[t]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Validated problem/policy pair with precomputed noise square roots.
///
/// Rollouts only need the action covariance to be PSD; the PD requirement
/// belongs to the gradient estimator.
#[derive(Debug, Clone)]
pub struct Simulator {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    k: DMatrix<f64>,
    sqrt_sigma_a: Option<DMatrix<f64>>,
    sqrt_sigma_s: Option<DMatrix<f64>>,
    horizon: usize,
}

fn nonzero_sqrt(s: &Mat) -> Result<Option<DMatrix<f64>>> {
    let root = psd_sqrt(s)?;
    if root.as_dmatrix().iter().all(|&x| x == 0.0) {
        Ok(None)
    } else {
        Ok(Some(root.into_dmatrix()))
    }
}

impl Simulator {
    pub fn new(p: &LqrProblem, pol: &GaussianPolicy) -> Result<Self> {
        check_problem_and_gain(p, &pol.k)?;
        let m = p.m();
        if pol.sigma_a.rows() != m || pol.sigma_a.cols() != m {
            return Err(dim(format!("sigma_a must be {m}x{m}")));
        }
        if !is_symmetric_psd(&pol.sigma_a)? {
            return Err(domain("sigma_a is not symmetric PSD"));
        }
        Ok(Simulator {
            a: p.a.as_dmatrix().clone(),
            b: p.b.as_dmatrix().clone(),
            q: p.q.as_dmatrix().clone(),
            r: p.r.as_dmatrix().clone(),
            k: pol.k.as_dmatrix().clone(),
            sqrt_sigma_a: nonzero_sqrt(&pol.sigma_a)?,
            sqrt_sigma_s: nonzero_sqrt(&p.sigma_s)?,
            horizon: p.horizon,
        })
    }

    /// Noise-free simulator for gain `k`.
    pub fn deterministic(p: &LqrProblem, k: &Mat) -> Result<Self> {
        check_problem_and_gain(p, k)?;
        Ok(Simulator {
            a: p.a.as_dmatrix().clone(),
            b: p.b.as_dmatrix().clone(),
            q: p.q.as_dmatrix().clone(),
            r: p.r.as_dmatrix().clone(),
            k: k.as_dmatrix().clone(),
            sqrt_sigma_a: None,
            sqrt_sigma_s: None,
            horizon: p.horizon,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Same simulator with a different gain.
    pub fn with_gain(&self, k: &Mat) -> Result<Self> {
        if k.rows() != self.m() || k.cols() != self.n() {
            return Err(dim("gain has the wrong shape"));
        }
        Ok(Simulator {
            k: k.as_dmatrix().clone(),
            ..self.clone()
        })
    }

    pub fn rollout(&self, s1: &[f64], key: RngKey) -> Result<Trajectory> {
        let mut rng = key.rng();
        self.run(s1, Some(&mut rng))
    }

    pub fn rollout_noise_free(&self, s1: &[f64]) -> Result<Trajectory> {
        self.run(s1, None)
    }

    fn run(&self, s1: &[f64], mut rng: Option<&mut ChaCha20Rng>) -> Result<Trajectory> {
        let (n, m) = (self.n(), self.m());
        if s1.len() != n {
            return Err(dim(format!("s1 has length {}, expected {n}", s1.len())));
        }
        let h = self.horizon;
        let mut states = Vec::with_capacity(h);
        let mut actions = Vec::with_capacity(h);
        let mut action_noise = Vec::with_capacity(h);
        let mut rewards = Vec::with_capacity(h);
        let mut s = DVector::from_column_slice(s1);
        for t in 0..h {
            let eps_a = match rng.as_deref_mut() {
                Some(g) => {
                    let delta = DVector::from_vec(standard_normals(g, m));
                    match &self.sqrt_sigma_a {
                        Some(root) => root * delta,
                        None => DVector::zeros(m),
                    }
                }
                None => DVector::zeros(m),
            };
            let a = &self.k * &s + &eps_a;
            let cost = s.dot(&(&self.q * &s)) + a.dot(&(&self.r * &a));
            rewards.push(-cost);
            let next = if t + 1 < h {
                let mut next = &self.a * &s + &self.b * &a;
                if let Some(g) = rng.as_deref_mut() {
                    let delta = DVector::from_vec(standard_normals(g, n));
                    if let Some(root) = &self.sqrt_sigma_s {
                        next += root * delta;
                    }
                }
                Some(next)
            } else {
                None
            };
            states.push(s.as_slice().to_vec());
            actions.push(a.as_slice().to_vec());
            action_noise.push(eps_a.as_slice().to_vec());
            if let Some(next) = next {
                s = next;
            }
        }
        let total_return = rewards.iter().sum();
        Ok(Trajectory {
            states,
            actions,
            action_noise,
            rewards,
            total_return,
        })
    }
}

/// Samples one trajectory of the stochastic policy from initial state `s1`.
pub fn rollout(p: &LqrProblem, pol: &GaussianPolicy, s1: &[f64], key: RngKey) -> Result<Trajectory> {
    Simulator::new(p, pol)?.rollout(s1, key)
}

/// Noise-free trajectory under `a = K s`, ignoring both covariances.
pub fn rollout_deterministic(p: &LqrProblem, k: &Mat, s1: &[f64]) -> Result<Trajectory> {
    Simulator::deterministic(p, k)?.rollout_noise_free(s1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Mat {
        Mat::scalar(x).unwrap()
    }

    fn scalar(a: f64, b: f64, q: f64, r: f64, ss: f64, h: usize) -> LqrProblem {
        LqrProblem {
            a: s(a),
            b: s(b),
            q: s(q),
            r: s(r),
            sigma_s: s(ss),
            horizon: h,
        }
    }

    #[test]
    fn zero_noise_matches_deterministic_bit_exactly() {
        let p = LqrProblem {
            a: Mat::from_rows(&[&[0.9, 0.2], &[-0.1, 0.8]]).unwrap(),
            b: Mat::new(2, 1, &[0.3, 1.0]).unwrap(),
            q: Mat::identity(2),
            r: s(0.5),
            sigma_s: Mat::zeros(2, 2),
            horizon: 8,
        };
        let pol = GaussianPolicy {
            k: Mat::new(1, 2, &[-0.2, 0.1]).unwrap(),
            sigma_a: s(0.0),
        };
        let key = RngKey::new(7, StreamContext::Rollout);
        let noisy = rollout(&p, &pol, &[1.0, -2.0], key).unwrap();
        let det = rollout_deterministic(&p, &pol.k, &[1.0, -2.0]).unwrap();
        assert_eq!(noisy, det);
        let m = p.closed_loop(&pol.k).unwrap();
        let expect = m.as_dmatrix() * DVector::from_column_slice(&det.states[0]);
        for (x, y) in det.states[1].iter().zip(expect.iter()) {
            assert!((x - y).abs() <= 1e-15 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn single_step_hand_evaluation() {
        let p = scalar(0.0, 1.0, 2.0, 3.0, 0.0, 1);
        let sim = Simulator::new(&p, &GaussianPolicy { k: s(0.0), sigma_a: s(1.0) }).unwrap();
        let key = RngKey::new(11, StreamContext::Rollout);
        let delta = standard_normals(&mut key.rng(), 1)[0];
        let tr = sim.rollout(&[1.0], key).unwrap();
        assert_eq!(tr.actions[0][0], delta);
        assert_eq!(tr.action_noise[0][0], delta);
        assert_eq!(tr.rewards[0], -(2.0 + 3.0 * delta * delta));
    }

    #[test]
    fn geometric_noise_free_states() {
        let tr = rollout_deterministic(&scalar(1.0, 1.0, 1.0, 1.0, 0.0, 5), &s(-0.5), &[1.0]).unwrap();
        let st: Vec<f64> = tr.states.iter().map(|v| v[0]).collect();
        assert_eq!(st, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
        assert!(tr.action_noise.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn trajectory_invariants_and_determinism() {
        let p = scalar(0.9, 0.5, 1.0, 0.4, 0.3, 12);
        let pol = GaussianPolicy { k: s(-0.6), sigma_a: s(0.7) };
        let sim = Simulator::new(&p, &pol).unwrap();
        for i in 0..20 {
            let key = RngKey::new(3, StreamContext::Rollout).with_trajectory(i);
            let tr = sim.rollout(&[0.4], key).unwrap();
            assert_eq!(tr, sim.rollout(&[0.4], key).unwrap());
            let sum: f64 = tr.rewards.iter().sum();
            assert!((tr.total_return - sum).abs() <= 1e-12 * sum.abs());
            for t in 0..tr.horizon() {
                let (st, at) = (tr.states[t][0], tr.actions[t][0]);
                assert_eq!(tr.rewards[t], -(st * st + 0.4 * at * at));
                let eps = tr.action_noise[t][0];
                assert!((at - (-0.6 * st) - eps).abs() <= 1e-12 * (1.0 + at.abs()));
            }
        }
        let a = sim.rollout(&[0.4], RngKey::new(3, StreamContext::Rollout)).unwrap();
        let b = sim.rollout(&[0.4], RngKey::new(3, StreamContext::Rollout).with_s1(1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn csv_dump_layout() {
        let tr = rollout_deterministic(&scalar(0.5, 1.0, 1.0, 1.0, 0.0, 2), &s(0.0), &[1.0]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,s0,a0,eps_a0,reward");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2,5e-1,0e0,0e0,"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = scalar(0.5, 1.0, 1.0, 1.0, 0.0, 2);
        let bad = GaussianPolicy { k: s(0.0), sigma_a: s(-1.0) };
        assert!(matches!(rollout(&p, &bad, &[1.0], RngKey::new(0, StreamContext::Rollout)), Err(crate::Error::Domain(_))));
        let pol = GaussianPolicy { k: s(0.0), sigma_a: s(1.0) };
        assert!(matches!(rollout(&p, &pol, &[1.0, 1.0], RngKey::new(0, StreamContext::Rollout)), Err(crate::Error::Dimension(_))));
    }
}
