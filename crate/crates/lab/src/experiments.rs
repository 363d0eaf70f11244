//! The five experiments. Each returns its rows in output order; all
//! randomness comes from keyed streams, so results do not depend on the
//! number of worker threads.
//!
//! Sweep points share their initial states and rollout streams, which keeps
//! Monte-Carlo noise correlated along a curve.

use lqrpg::bounds::UpperBoundContext;
use lqrpg::ctrlmath::{place_poles, solve_dare, spectral_radius};
use lqrpg::pg::{pairwise_sum, perturb_to_radius, train_reinforce, GradSampler, TrainConfig, VarianceEstimate};
use lqrpg::probgen::{eig_prototype, random_lqr, scale_prototype, ProblemRecipe};
use lqrpg::rollout::isotropic_gaussian;
use lqrpg::{GaussianPolicy, LqrProblem, Mat, RngKey, StreamContext};
use rayon::prelude::*;

use serde::Serialize;

use crate::config::{Experiment, StepSize, SweepConfig};
use crate::error::{LabError, LabResult};
use crate::table::{BandRow, CurveRow, ScatterRow, SweepRow};

/// Rows produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Sweep(Vec<SweepRow>),
    Scatter(Vec<ScatterRow>),
    Curves { runs: Vec<CurveRow>, bands: Vec<BandRow>, step: StepChoice },
}

impl Output {
    pub fn flagged_rows(&self) -> usize {
        match self {
            Output::Sweep(rows) => rows.iter().filter(|r| r.flagged).count(),
            Output::Scatter(rows) => rows.iter().filter(|r| r.flagged).count(),
            Output::Curves { runs, .. } => runs.iter().filter(|r| r.diverged).count(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Output::Sweep(rows) => rows.len(),
            Output::Scatter(rows) => rows.len(),
            Output::Curves { runs, .. } => runs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn run(cfg: &SweepConfig) -> LabResult<Output> {
    match cfg.experiment {
        Experiment::SigmaA => run_sigma_a_sweep(cfg).map(Output::Sweep),
        Experiment::BMag => run_bmag_sweep(cfg).map(Output::Sweep),
        Experiment::Rho => run_rho_sweep(cfg).map(Output::Sweep),
        Experiment::Scatter => run_scatter(cfg).map(Output::Scatter),
        Experiment::Curves => run_learning_curves(cfg).map(|(runs, bands, step)| Output::Curves { runs, bands, step }),
    }
}

fn expect(cfg: &SweepConfig, e: Experiment) -> LabResult<()> {
    if cfg.experiment == e {
        Ok(())
    } else {
        Err(LabError::Config(format!("configuration is for {}, not {e}", cfg.experiment)))
    }
}

/// Initial states `s1 ~ N(0, n^{-1} I)`.
pub fn initial_states(seed: u64, n: usize, count: usize) -> Vec<Vec<f64>> {
    let key = RngKey::new(seed, StreamContext::InitialState);
    (0..count as u64)
        .map(|j| isotropic_gaussian(key.with_s1(j), n, (n as f64).powf(-0.5)))
        .collect()
}

/// Bound and Monte-Carlo moments averaged over a set of initial states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub bound_mean: f64,
    pub nu_mean: f64,
    pub second_moment_mean: f64,
    /// Monte-Carlo standard error of `nu_mean` given the initial states.
    pub nu_std_error: f64,
    pub second_moment_std_error: f64,
}

impl PointEstimate {
    fn is_finite(&self) -> bool {
        [self.bound_mean, self.nu_mean, self.second_moment_mean, self.nu_std_error, self.second_moment_std_error]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Averages the upper bound and the estimator moments over `states`.
///
/// Initial state `j` uses rollout streams `rollout_key.with_s1(j)`.
pub fn estimate_point(
    p: &LqrProblem,
    pol: &GaussianPolicy,
    states: &[Vec<f64>],
    num_traj: usize,
    rollout_key: RngKey,
) -> lqrpg::Result<PointEstimate> {
    let ctx = UpperBoundContext::new(p, pol)?;
    let sampler = GradSampler::new(p, pol)?;
    let per_state = states
        .par_iter()
        .enumerate()
        .map(|(j, s1)| {
            let bound = ctx.evaluate(s1)?.bound;
            let samples = sampler.sample_many(s1, num_traj, rollout_key.with_s1(j as u64))?;
            Ok((bound, VarianceEstimate::from_samples(&samples)?))
        })
        .collect::<lqrpg::Result<Vec<_>>>()?;
    let count = per_state.len() as f64;
    let mean = |f: &dyn Fn(&(f64, VarianceEstimate)) -> f64| pairwise_sum(&per_state.iter().map(f).collect::<Vec<_>>()) / count;
    Ok(PointEstimate {
        bound_mean: mean(&|x| x.0),
        nu_mean: mean(&|x| x.1.nu_hat),
        second_moment_mean: mean(&|x| x.1.second_moment_hat),
        nu_std_error: (mean(&|x| x.1.std_error_nu.powi(2)) / count).sqrt(),
        second_moment_std_error: (mean(&|x| x.1.std_error_second_moment.powi(2)) / count).sqrt(),
    })
}

fn flagged_row(sweep_value: f64, scale: f64, rho: f64) -> SweepRow {
    SweepRow {
        sweep_value,
        scale,
        bound_mean: f64::NAN,
        empirical_nu_mean: f64::NAN,
        empirical_second_moment_mean: f64::NAN,
        nu_std_error: f64::NAN,
        rho_achieved: rho,
        second_moment_std_error: f64::NAN,
        flagged: true,
    }
}

/// A problem variant at one sweep point, or the reason it could not be built.
type Variant = Result<(LqrProblem, GaussianPolicy, f64), (String, f64)>;

/// Runs every `(scale, grid value)` pair through `build` and [`estimate_point`],
/// ordered by scale, then by sweep value.
fn run_grid(cfg: &SweepConfig, build: impl Fn(f64, f64) -> Variant + Sync) -> Vec<SweepRow> {
    let mut scales = cfg.scale_set.clone();
    scales.sort_by(f64::total_cmp);
    let states = initial_states(cfg.recipe.seed, cfg.recipe.n, cfg.num_s1);
    let key = RngKey::new(cfg.recipe.seed, StreamContext::Rollout);
    let points: Vec<(f64, f64)> = scales.iter().flat_map(|&s| cfg.grid.iter().map(move |&v| (s, v))).collect();
    points
        .par_iter()
        .map(|&(scale, value)| match build(value, scale) {
            Err((_, rho)) => flagged_row(value, scale, rho),
            Ok((p, pol, rho)) => match estimate_point(&p, &pol, &states, cfg.num_traj, key) {
                Ok(est) if est.is_finite() => SweepRow {
                    sweep_value: value,
                    scale,
                    bound_mean: est.bound_mean,
                    empirical_nu_mean: est.nu_mean,
                    empirical_second_moment_mean: est.second_moment_mean,
                    nu_std_error: est.nu_std_error,
                    rho_achieved: rho,
                    second_moment_std_error: est.second_moment_std_error,
                    flagged: false,
                },
                _ => flagged_row(value, scale, rho),
            },
        })
        .collect()
}

fn closed_loop_radius(p: &LqrProblem, k: &Mat) -> f64 {
    p.closed_loop(k).and_then(|m| spectral_radius(&m)).unwrap_or(f64::NAN)
}

fn base_problem(recipe: &ProblemRecipe) -> LabResult<(LqrProblem, GaussianPolicy)> {
    random_lqr(recipe).map_err(LabError::from)
}

fn scaled(m: &Mat, s: f64) -> Result<Mat, (String, f64)> {
    m.scale(s).map_err(|e| (e.to_string(), f64::NAN))
}

/// `Sigma_a = sigma_a I` at `K = K*`, one curve per state-noise scale.
pub fn run_sigma_a_sweep(cfg: &SweepConfig) -> LabResult<Vec<SweepRow>> {
    expect(cfg, Experiment::SigmaA)?;
    let (p, pol) = base_problem(&cfg.recipe)?;
    let rho = closed_loop_radius(&p, &pol.k);
    let m = p.m();
    Ok(run_grid(cfg, |sigma_a, scale| {
        let variant = LqrProblem { sigma_s: scaled(&p.sigma_s, scale)?, ..p.clone() };
        let policy = GaussianPolicy { k: pol.k.clone(), sigma_a: scaled(&Mat::identity(m), sigma_a)? };
        Ok((variant, policy, rho))
    }))
}

/// `B = b I` with the optimal gain recomputed for every `b`; the scale
/// multiplies both noise covariances.
pub fn run_bmag_sweep(cfg: &SweepConfig) -> LabResult<Vec<SweepRow>> {
    expect(cfg, Experiment::BMag)?;
    if cfg.recipe.m != cfg.recipe.n {
        return Err(LabError::Config("b_mag needs m = n".into()));
    }
    let (p, pol) = base_problem(&cfg.recipe)?;
    let n = p.n();
    Ok(run_grid(cfg, |b, scale| {
        let b_mat = scaled(&Mat::identity(n), b)?;
        let k = solve_dare(&p.a, &b_mat, &p.q, &p.r).map_err(|e| (e.to_string(), f64::NAN))?.k_star;
        let variant = LqrProblem { b: b_mat, sigma_s: scaled(&p.sigma_s, scale)?, ..p.clone() };
        let rho = closed_loop_radius(&variant, &k);
        Ok((variant, GaussianPolicy { k, sigma_a: scaled(&pol.sigma_a, scale)? }, rho))
    }))
}

/// Gains placing a rescaled eigenvalue prototype; the prototype is
/// normalized to unit spectral radius, so each grid value is the requested
/// closed-loop radius. The scale multiplies both noise covariances.
pub fn run_rho_sweep(cfg: &SweepConfig) -> LabResult<Vec<SweepRow>> {
    expect(cfg, Experiment::Rho)?;
    let (p, pol) = base_problem(&cfg.recipe)?;
    let proto = eig_prototype(p.n(), RngKey::new(cfg.recipe.seed, StreamContext::Prototype)).normalized()?;
    Ok(run_grid(cfg, |rho, scale| {
        let lambdas = scale_prototype(&proto, rho).map_err(|e| (e.to_string(), f64::NAN))?;
        let k = place_poles(&p.a, &p.b, &lambdas).map_err(|e| (e.to_string(), f64::NAN))?;
        let achieved = closed_loop_radius(&p, &k);
        if !(achieved < 1.0) {
            return Err(("placed gain is not stabilizing".into(), achieved));
        }
        let variant = LqrProblem { sigma_s: scaled(&p.sigma_s, scale)?, ..p.clone() };
        Ok((variant, GaussianPolicy { k, sigma_a: scaled(&pol.sigma_a, scale)? }, achieved))
    }))
}

/// Seed of problem `i` in a multi-problem run.
pub fn derived_seed(seed: u64, i: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (i.wrapping_add(1)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Problem `i` cycles through the `(n, H)` combinations; `m = ceil(n/2)`.
pub fn scatter_recipe(cfg: &SweepConfig, i: usize) -> ProblemRecipe {
    let combos: Vec<(usize, usize)> = cfg
        .scatter_dims
        .iter()
        .flat_map(|&n| cfg.scatter_horizons.iter().map(move |&h| (n, h)))
        .collect();
    let (n, horizon) = combos[i % combos.len()];
    ProblemRecipe {
        n,
        m: n.div_ceil(2),
        horizon,
        seed: derived_seed(cfg.recipe.seed, i as u64),
        ..cfg.recipe.clone()
    }
}

pub fn run_scatter(cfg: &SweepConfig) -> LabResult<Vec<ScatterRow>> {
    expect(cfg, Experiment::Scatter)?;
    let rows = (0..cfg.num_problems)
        .into_par_iter()
        .map(|i| {
            let recipe = scatter_recipe(cfg, i);
            let mut row = ScatterRow {
                empirical_second_moment_mean: f64::NAN,
                bound_mean: f64::NAN,
                n: recipe.n,
                m: recipe.m,
                horizon: recipe.horizon,
                problem: i,
                second_moment_std_error: f64::NAN,
                empirical_nu_mean: f64::NAN,
                nu_std_error: f64::NAN,
                rho: f64::NAN,
                flagged: true,
            };
            let Ok((p, pol)) = random_lqr(&recipe) else {
                return row;
            };
            row.rho = closed_loop_radius(&p, &pol.k);
            let states = initial_states(recipe.seed, recipe.n, cfg.num_s1);
            let key = RngKey::new(recipe.seed, StreamContext::Rollout);
            if let Ok(est) = estimate_point(&p, &pol, &states, cfg.num_traj, key) {
                if est.is_finite() {
                    row.empirical_second_moment_mean = est.second_moment_mean;
                    row.bound_mean = est.bound_mean;
                    row.second_moment_std_error = est.second_moment_std_error;
                    row.empirical_nu_mean = est.nu_mean;
                    row.nu_std_error = est.nu_std_error;
                    row.flagged = false;
                }
            }
            row
        })
        .collect();
    Ok(rows)
}

/// Candidate step sizes tried by `step_size=auto`, largest first.
pub const STEP_CANDIDATES: [f64; 9] = [1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-7, 1e-7, 3e-8, 1e-8];

/// Pilot repetitions per pair of noise scales during the step search.
pub const PILOT_SEEDS: usize = 2;

/// Outcome of one step-size candidate in the pilot search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PilotTrial {
    pub step_size: f64,
    pub runs: usize,
    pub diverged_runs: usize,
}

/// The step size used for the learning curves and how it was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepChoice {
    pub step_size: f64,
    /// Empty when the step size was fixed in the configuration.
    pub pilot: Vec<PilotTrial>,
}

struct CurveSetup {
    problem: LqrProblem,
    policy: GaussianPolicy,
    k0: Mat,
}

impl CurveSetup {
    fn train(&self, sa: f64, ss: f64, train: &TrainConfig, key: RngKey) -> lqrpg::Result<lqrpg::pg::LearningCurve> {
        let variant = LqrProblem { sigma_s: self.problem.sigma_s.scale(ss)?, ..self.problem.clone() };
        let policy = GaussianPolicy { k: self.k0.clone(), sigma_a: self.policy.sigma_a.scale(sa)? };
        train_reinforce(&variant, &policy, train, key)
    }
}

fn scale_pairs(cfg: &SweepConfig, reps: usize) -> Vec<(f64, f64, usize)> {
    let c = &cfg.curves;
    let mut jobs = Vec::new();
    for &sa in &c.sigma_a_scales {
        for &ss in &c.sigma_s_scales {
            for j in 0..reps {
                jobs.push((sa, ss, j));
            }
        }
    }
    jobs
}

fn train_config(cfg: &SweepConfig, step_size: f64) -> TrainConfig {
    let c = &cfg.curves;
    TrainConfig {
        steps: c.steps,
        step_size,
        batch: c.batch,
        eval_every: c.eval_every,
        num_eval_states: c.num_eval_states,
        eval_seed: cfg.recipe.seed,
        keep_snapshots: false,
    }
}

/// Largest candidate at which no pilot run diverges; the smallest candidate
/// if every one diverges somewhere. Pilot runs use their own noise streams
/// and evaluate only at the end.
fn search_step_size(cfg: &SweepConfig, setup: &CurveSetup) -> LabResult<StepChoice> {
    let pilot_seed = derived_seed(cfg.recipe.seed, u64::MAX);
    let jobs = scale_pairs(cfg, PILOT_SEEDS);
    let mut pilot = Vec::new();
    for &step_size in &STEP_CANDIDATES {
        let train = TrainConfig { eval_every: cfg.curves.steps, ..train_config(cfg, step_size) };
        let diverged = jobs
            .par_iter()
            .map(|&(sa, ss, j)| {
                let key = RngKey::new(derived_seed(pilot_seed, j as u64), StreamContext::Training);
                setup.train(sa, ss, &train, key).map(|c| c.diverged)
            })
            .collect::<lqrpg::Result<Vec<bool>>>()?;
        let diverged_runs = diverged.iter().filter(|&&d| d).count();
        pilot.push(PilotTrial { step_size, runs: jobs.len(), diverged_runs });
        if diverged_runs == 0 {
            return Ok(StepChoice { step_size, pilot });
        }
    }
    Ok(StepChoice { step_size: STEP_CANDIDATES[STEP_CANDIDATES.len() - 1], pilot })
}

/// REINFORCE from a perturbed optimal gain for every pair of noise scales.
///
/// The problem, the initial gain and the evaluation states are shared by
/// every run; repetition `j` differs only in its noise and initial-state
/// streams, which are the same for every pair of scales.
pub fn run_learning_curves(cfg: &SweepConfig) -> LabResult<(Vec<CurveRow>, Vec<BandRow>, StepChoice)> {
    expect(cfg, Experiment::Curves)?;
    let (problem, policy) = base_problem(&cfg.recipe)?;
    let k0 = perturb_to_radius(
        &problem,
        &policy.k,
        cfg.curves.target_rho,
        RngKey::new(cfg.recipe.seed, StreamContext::Perturbation),
    )?;
    let setup = CurveSetup { problem, policy, k0 };
    let step = match cfg.curves.step_size {
        StepSize::Fixed(step_size) => StepChoice { step_size, pilot: Vec::new() },
        StepSize::Auto => search_step_size(cfg, &setup)?,
    };
    let train = train_config(cfg, step.step_size);
    let per_run = scale_pairs(cfg, cfg.curves.num_seeds)
        .par_iter()
        .map(|&(sa, ss, j)| {
            let key = RngKey::new(derived_seed(cfg.recipe.seed, j as u64), StreamContext::Training);
            let curve = setup.train(sa, ss, &train, key)?;
            Ok(curve
                .iterations
                .iter()
                .zip(curve.eval_returns.iter().zip(&curve.train_returns))
                .map(|(&iteration, (&eval_return, &train_return))| CurveRow {
                    sigma_a_scale: sa,
                    sigma_s_scale: ss,
                    seed_index: j,
                    iteration,
                    eval_return,
                    train_return,
                    diverged: curve.diverged,
                })
                .collect::<Vec<_>>())
        })
        .collect::<lqrpg::Result<Vec<_>>>()?;
    let runs: Vec<CurveRow> = per_run.into_iter().flatten().collect();
    let bands = curve_bands(&runs);
    Ok((runs, bands, step))
}

/// Mean and sample standard deviation of the evaluation return across seeds
/// at every checkpoint, in order of first appearance of each scale pair.
pub fn curve_bands(runs: &[CurveRow]) -> Vec<BandRow> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for r in runs {
        if !pairs.contains(&(r.sigma_a_scale, r.sigma_s_scale)) {
            pairs.push((r.sigma_a_scale, r.sigma_s_scale));
        }
    }
    let mut out = Vec::new();
    for (sa, ss) in pairs {
        let rows: Vec<&CurveRow> = runs.iter().filter(|r| r.sigma_a_scale == sa && r.sigma_s_scale == ss).collect();
        let mut seeds: Vec<usize> = rows.iter().filter(|r| r.diverged).map(|r| r.seed_index).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let diverged_runs = seeds.len();
        let mut iterations: Vec<usize> = rows.iter().map(|r| r.iteration).collect();
        iterations.sort_unstable();
        iterations.dedup();
        for it in iterations {
            let vals: Vec<f64> = rows.iter().filter(|r| r.iteration == it).map(|r| r.eval_return).collect();
            let k = vals.len() as f64;
            let mean = pairwise_sum(&vals) / k;
            let var = if vals.len() > 1 {
                pairwise_sum(&vals.iter().map(|v| (v - mean).powi(2)).collect::<Vec<_>>()) / (k - 1.0)
            } else {
                0.0
            };
            out.push(BandRow {
                sigma_a_scale: sa,
                sigma_s_scale: ss,
                iteration: it,
                eval_mean: mean,
                eval_std: var.sqrt(),
                runs: vals.len(),
                diverged_runs,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    fn cfg(pairs: &[(&str, &str)]) -> SweepConfig {
        let mut s = Settings::new();
        for (k, v) in pairs {
            s.set(k, v).unwrap();
        }
        SweepConfig::from_settings(&s).unwrap()
    }

    #[test]
    fn sweep_rows_are_ordered_and_finite() {
        let c = cfg(&[("experiment", "sigma_a"), ("grid_points", "3"), ("scales", "10,0.1"), ("num_s1", "3"), ("num_traj", "5")]);
        let rows = run_sigma_a_sweep(&c).unwrap();
        let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.scale, r.sweep_value)).collect();
        assert_eq!(keys, vec![(0.1, 0.01), (0.1, 1.0), (0.1, 100.0), (10.0, 0.01), (10.0, 1.0), (10.0, 100.0)]);
        assert!(rows.iter().all(|r| !r.flagged && r.bound_mean > 0.0 && r.rho_achieved < 1.0));
        assert!(run_rho_sweep(&c).is_err());
    }

    #[test]
    fn rho_sweep_hits_requested_radius() {
        let c = cfg(&[("experiment", "rho"), ("grid", "0.2,0.6,0.9"), ("scales", "1"), ("num_s1", "2"), ("num_traj", "4")]);
        for r in run_rho_sweep(&c).unwrap() {
            assert!((r.rho_achieved - r.sweep_value).abs() < 1e-4);
        }
    }

    #[test]
    fn bmag_sweep_recomputes_gain() {
        let c = cfg(&[("experiment", "b_mag"), ("n", "3"), ("grid", "0.5,2"), ("scales", "1"), ("num_s1", "2"), ("num_traj", "4")]);
        let rows = run_bmag_sweep(&c).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| !r.flagged && r.rho_achieved < 1.0));
    }

    #[test]
    fn scatter_dimensions() {
        let c = cfg(&[("experiment", "scatter"), ("num_problems", "9"), ("num_s1", "2"), ("num_traj", "3"), ("dims", "3,10"), ("horizons", "3")]);
        let rows = run_scatter(&c).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!((rows[0].n, rows[0].m), (3, 2));
        assert_eq!((rows[1].n, rows[1].m), (10, 5));
        assert!(rows.iter().all(|r| !r.flagged));
        let c30 = cfg(&[("experiment", "scatter"), ("dims", "30"), ("horizons", "3")]);
        assert_eq!(scatter_recipe(&c30, 0).m, 15);
    }

    #[test]
    fn curves_share_problem_and_eval_cadence() {
        let c = cfg(&[
            ("experiment", "curves"),
            ("n", "3"),
            ("m", "2"),
            ("curve_sigma_a", "1"),
            ("curve_sigma_s", "1"),
            ("curve_seeds", "2"),
            ("steps", "20"),
            ("step_size", "1e-8"),
            ("num_eval_states", "5"),
        ]);
        let (runs, bands, step) = run_learning_curves(&c).unwrap();
        assert!(step.pilot.is_empty());
        let iters: Vec<usize> = runs.iter().filter(|r| r.seed_index == 0).map(|r| r.iteration).collect();
        assert_eq!(iters, vec![0, 10, 20]);
        let first: Vec<f64> = runs.iter().filter(|r| r.iteration == 0).map(|r| r.eval_return).collect();
        assert_eq!(first[0], first[1]);
        assert_eq!(bands[0].eval_std, 0.0);
        assert_eq!(bands.len(), 3);
    }

    #[test]
    fn auto_step_is_largest_stable_candidate() {
        let c = cfg(&[
            ("experiment", "curves"),
            ("n", "3"),
            ("m", "2"),
            ("curve_sigma_a", "1"),
            ("curve_sigma_s", "1"),
            ("curve_seeds", "1"),
            ("steps", "20"),
            ("batch", "10"),
            ("num_eval_states", "5"),
        ]);
        let (runs, _, step) = run_learning_curves(&c).unwrap();
        let last = step.pilot.last().unwrap();
        assert_eq!(last.step_size, step.step_size);
        assert!(step.pilot[..step.pilot.len() - 1].iter().all(|t| t.diverged_runs > 0));
        assert!(last.diverged_runs == 0 || step.step_size == STEP_CANDIDATES[8]);
        assert!(!runs.is_empty());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| derived_seed(7, i)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), 100);
    }
}
