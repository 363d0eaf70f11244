//! Run configuration.
//!
//! Settings are plain `key=value` pairs. A run resolves them in layers:
//! built-in defaults, then an optional config file, then command-line flags.
//! [`SweepConfig::to_settings`] writes back a complete set that reproduces
//! the same run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lqrpg::probgen::ProblemRecipe;
use serde::Serialize;

use crate::error::{config, LabResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LQRLAB_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "lqrlab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SigmaA,
    BMag,
    Rho,
    Scatter,
    Curves,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::SigmaA,
        Experiment::BMag,
        Experiment::Rho,
        Experiment::Scatter,
        Experiment::Curves,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SigmaA => "sigma_a",
            Experiment::BMag => "b_mag",
            Experiment::Rho => "rho",
            Experiment::Scatter => "scatter",
            Experiment::Curves => "curves",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, Experiment::SigmaA | Experiment::BMag | Experiment::Rho)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}' (expected sigma_a, b_mag, rho, scatter or curves)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    Geometric,
    Linear,
}

impl FromStr for GridSpacing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "geometric" => Ok(GridSpacing::Geometric),
            "linear" => Ok(GridSpacing::Linear),
            _ => Err(format!("unknown grid spacing '{s}' (expected geometric or linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum YScale {
    #[default]
    Log,
    Linear,
}

impl FromStr for YScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "log" => Ok(YScale::Log),
            "linear" => Ok(YScale::Linear),
            _ => Err(format!("unknown y scale '{s}' (expected log or linear)")),
        }
    }
}

/// REINFORCE step size: a fixed value, or `auto` for the largest candidate
/// at which no pilot run diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

impl FromStr for StepSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(StepSize::Auto);
        }
        s.parse::<f64>()
            .map(StepSize::Fixed)
            .map_err(|_| format!("expected a number or 'auto', got '{s}'"))
    }
}

impl fmt::Display for StepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSize::Auto => f.write_str("auto"),
            StepSize::Fixed(x) => write!(f, "{x}"),
        }
    }
}

/// Settings of the learning-curve experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSettings {
    pub sigma_a_scales: Vec<f64>,
    pub sigma_s_scales: Vec<f64>,
    pub num_seeds: usize,
    pub steps: usize,
    pub step_size: StepSize,
    pub batch: usize,
    pub eval_every: usize,
    pub num_eval_states: usize,
    pub target_rho: f64,
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    #[serde(skip)]
    pub recipe: ProblemRecipe,
    /// Swept values, strictly increasing.
    pub grid: Vec<f64>,
    /// Noise-scale family; one output line per entry.
    pub scale_set: Vec<f64>,
    pub num_s1: usize,
    pub num_traj: usize,
    pub out_path: PathBuf,
    pub num_problems: usize,
    pub scatter_dims: Vec<usize>,
    pub scatter_horizons: Vec<usize>,
    pub curves: CurveSettings,
}

/// Options that change how a run executes but never its CSV output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub render: bool,
    pub y_scale: YScale,
}

const KEYS: &[(&str, &str)] = &[
    ("experiment", "sigma_a | b_mag | rho | scatter | curves"),
    ("seed", "base seed of every random stream"),
    ("n", "state dimension"),
    ("m", "action dimension (defaults to n for b_mag)"),
    ("horizon", "episode length H"),
    ("sigma_s_scale", "multiplier on the sampled state-noise covariance"),
    ("sigma_a_scale", "multiplier on the sampled action-noise covariance"),
    ("grid", "explicit comma-separated sweep values (overrides grid_min/max/points)"),
    ("grid_min", "first sweep value"),
    ("grid_max", "last sweep value"),
    ("grid_points", "number of sweep values"),
    ("grid_spacing", "geometric | linear"),
    ("scales", "comma-separated noise-scale family"),
    ("num_s1", "initial states per sweep point"),
    ("num_traj", "trajectories per initial state"),
    ("out", "output CSV path"),
    ("num_problems", "problems in the scatter experiment"),
    ("dims", "state dimensions of the scatter experiment"),
    ("horizons", "horizons of the scatter experiment"),
    ("curve_sigma_a", "action-noise scales of the learning curves"),
    ("curve_sigma_s", "state-noise scales of the learning curves"),
    ("curve_seeds", "repetitions per learning-curve setting"),
    ("steps", "REINFORCE iterations"),
    ("step_size", "REINFORCE step size, or auto"),
    ("batch", "trajectories per REINFORCE step"),
    ("eval_every", "iterations between noise-free evaluations"),
    ("num_eval_states", "initial states of the noise-free evaluation"),
    ("target_rho", "closed-loop spectral radius of the perturbed initial gain"),
    ("threads", "worker threads (0 = automatic)"),
    ("render", "write SVG plots next to the CSV (true/false)"),
    ("y_scale", "log | linear"),
];

/// Recognized keys with one-line descriptions.
pub fn known_keys() -> &'static [(&'static str, &'static str)] {
    KEYS
}

/// An ordered `key=value` map restricted to the known keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        let key = key.trim().replace('-', "_");
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(config(format!("unknown setting '{key}'")));
        }
        self.0.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut out = Settings::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
            out.set(k, v).map_err(|e| config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::LabError::io(path, e))?;
        Self::parse(&text)
    }

    /// Later values win.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// One `key=value` line per entry, sorted by key.
    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn parsed<T: FromStr>(&self, key: &str) -> LabResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| config(format!("{key}: cannot parse '{v}': {e}"))))
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> LabResult<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str, default: &[T]) -> LabResult<Vec<T>>
    where
        T::Err: fmt::Display,
        T: Clone,
    {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<T>().map_err(|e| config(format!("{key}: cannot parse '{s}': {e}"))))
                .collect(),
        }
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// `points` values from `min` to `max` inclusive.
pub fn make_grid(min: f64, max: f64, points: usize, spacing: GridSpacing) -> LabResult<Vec<f64>> {
    if points == 0 {
        return Err(config("grid_points must be at least 1"));
    }
    if !(min.is_finite() && max.is_finite()) || min > max {
        return Err(config(format!("invalid grid range [{min}, {max}]")));
    }
    if spacing == GridSpacing::Geometric && min <= 0.0 {
        return Err(config("a geometric grid needs positive endpoints"));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let last = (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / last;
            match spacing {
                GridSpacing::Linear => min + (max - min) * t,
                GridSpacing::Geometric => 10f64.powf(min.log10() + (max.log10() - min.log10()) * t),
            }
        })
        .collect();
    grid[0] = min;
    grid[points - 1] = max;
    Ok(grid)
}

fn default_out_path(experiment: Experiment) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR));
    dir.join(format!("{}.csv", experiment.name()))
}

fn require(cond: bool, msg: &str) -> LabResult<()> {
    if cond {
        Ok(())
    } else {
        Err(config(msg))
    }
}

impl SweepConfig {
    /// Resolves settings against the per-experiment defaults and validates the result.
    pub fn from_settings(s: &Settings) -> LabResult<Self> {
        let experiment: Experiment = s
            .parsed("experiment")?
            .ok_or_else(|| config("no experiment given (set experiment=... or pass --experiment)"))?;
        let n: usize = s.or("n", 5)?;
        let m_default = if experiment == Experiment::BMag { n } else { 3 };
        let recipe = ProblemRecipe {
            n,
            m: s.or("m", m_default)?,
            horizon: s.or("horizon", 10)?,
            sigma_s_scale: s.or("sigma_s_scale", 1.0)?,
            sigma_a_scale: s.or("sigma_a_scale", 1.0)?,
            seed: s.or("seed", 0)?,
        };
        let (gmin, gmax, gpoints, gspacing) = match experiment {
            Experiment::Rho => (0.05, 0.95, 19, GridSpacing::Linear),
            _ => (1e-2, 1e2, 25, GridSpacing::Geometric),
        };
        let grid = match s.get("grid") {
            Some(_) => s.list::<f64>("grid", &[])?,
            None => make_grid(
                s.or("grid_min", gmin)?,
                s.or("grid_max", gmax)?,
                s.or("grid_points", gpoints)?,
                s.or("grid_spacing", gspacing)?,
            )?,
        };
        let out_path = s.get("out").map(PathBuf::from).unwrap_or_else(|| default_out_path(experiment));
        let cfg = SweepConfig {
            experiment,
            recipe,
            grid,
            scale_set: s.list("scales", &[0.1, 1.0, 10.0])?,
            num_s1: s.or("num_s1", 100)?,
            num_traj: s.or("num_traj", 30)?,
            out_path,
            num_problems: s.or("num_problems", 1000)?,
            scatter_dims: s.list("dims", &[3, 10, 30])?,
            scatter_horizons: s.list("horizons", &[3, 10, 30])?,
            curves: CurveSettings {
                sigma_a_scales: s.list("curve_sigma_a", &[0.1, 1.0, 10.0])?,
                sigma_s_scales: s.list("curve_sigma_s", &[0.1, 1.0])?,
                num_seeds: s.or("curve_seeds", 10)?,
                steps: s.or("steps", 300)?,
                step_size: s.or("step_size", StepSize::Auto)?,
                batch: s.or("batch", 100)?,
                eval_every: s.or("eval_every", 10)?,
                num_eval_states: s.or("num_eval_states", 100)?,
                target_rho: s.or("target_rho", 0.98)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> LabResult<()> {
        let r = &self.recipe;
        self.recipe.check().map_err(|e| config(e.to_string()))?;
        require(self.num_s1 >= 1, "num_s1 must be at least 1")?;
        require(self.num_traj >= 2, "num_traj must be at least 2")?;
        if self.experiment.is_sweep() {
            require(!self.grid.is_empty(), "the sweep grid is empty")?;
            require(self.grid.iter().all(|x| x.is_finite()), "grid values must be finite")?;
            require(self.grid.windows(2).all(|w| w[0] < w[1]), "grid values must be strictly increasing")?;
            require(!self.scale_set.is_empty(), "the scale set is empty")?;
            require(
                self.scale_set.iter().all(|x| x.is_finite() && *x > 0.0),
                "scales must be positive and finite",
            )?;
        }
        match self.experiment {
            Experiment::SigmaA => require(self.grid[0] > 0.0, "sigma_a grid values must be positive")?,
            Experiment::BMag => {
                require(self.grid[0] > 0.0, "b grid values must be positive")?;
                if r.m != r.n {
                    return Err(config(format!("b_mag needs m = n, got n={} m={}", r.n, r.m)));
                }
            }
            Experiment::Rho => require(
                self.grid[0] > 0.0 && self.grid[self.grid.len() - 1] < 1.0,
                "rho grid values must lie in (0, 1)",
            )?,
            Experiment::Scatter => {
                require(self.num_problems >= 1, "num_problems must be at least 1")?;
                require(!self.scatter_dims.is_empty() && !self.scatter_horizons.is_empty(), "dims and horizons must be nonempty")?;
                require(
                    self.scatter_dims.iter().chain(&self.scatter_horizons).all(|&x| x >= 1),
                    "dims and horizons must be at least 1",
                )?;
            }
            Experiment::Curves => {
                let c = &self.curves;
                require(
                    !c.sigma_a_scales.is_empty() && !c.sigma_s_scales.is_empty(),
                    "curve_sigma_a and curve_sigma_s must be nonempty",
                )?;
                require(
                    c.sigma_a_scales.iter().chain(&c.sigma_s_scales).all(|x| x.is_finite() && *x > 0.0),
                    "curve noise scales must be positive and finite",
                )?;
                require(c.num_seeds >= 1, "curve_seeds must be at least 1")?;
                require(c.steps >= 1 && c.batch >= 1 && c.eval_every >= 1, "steps, batch and eval_every must be positive")?;
                require(c.num_eval_states >= 1, "num_eval_states must be at least 1")?;
                if let StepSize::Fixed(x) = c.step_size {
                    require(x.is_finite() && x >= 0.0, "step_size must be finite and nonnegative")?;
                }
                require(c.target_rho > 0.0 && c.target_rho < 1.0, "target_rho must lie in (0, 1)")?;
            }
        }
        Ok(())
    }

    /// Complete settings that resolve back to this configuration.
    pub fn to_settings(&self) -> Settings {
        let r = &self.recipe;
        let c = &self.curves;
        let mut s = Settings::new();
        let pairs: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.name().to_string()),
            ("seed", r.seed.to_string()),
            ("n", r.n.to_string()),
            ("m", r.m.to_string()),
            ("horizon", r.horizon.to_string()),
            ("sigma_s_scale", r.sigma_s_scale.to_string()),
            ("sigma_a_scale", r.sigma_a_scale.to_string()),
            ("grid", join(&self.grid)),
            ("scales", join(&self.scale_set)),
            ("num_s1", self.num_s1.to_string()),
            ("num_traj", self.num_traj.to_string()),
            ("out", self.out_path.display().to_string()),
            ("num_problems", self.num_problems.to_string()),
            ("dims", join(&self.scatter_dims)),
            ("horizons", join(&self.scatter_horizons)),
            ("curve_sigma_a", join(&c.sigma_a_scales)),
            ("curve_sigma_s", join(&c.sigma_s_scales)),
            ("curve_seeds", c.num_seeds.to_string()),
            ("steps", c.steps.to_string()),
            ("step_size", c.step_size.to_string()),
            ("batch", c.batch.to_string()),
            ("eval_every", c.eval_every.to_string()),
            ("num_eval_states", c.num_eval_states.to_string()),
            ("target_rho", c.target_rho.to_string()),
        ];
        for (k, v) in pairs {
            s.0.insert(k.to_string(), v);
        }
        s
    }
}

impl RunOptions {
    pub fn from_settings(s: &Settings) -> LabResult<Self> {
        Ok(RunOptions {
            threads: s.or("threads", 0)?,
            render: s.or("render", false)?,
            y_scale: s.or("y_scale", YScale::Log)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        let mut s = Settings::new();
        for (k, v) in pairs {
            s.set(k, v).unwrap();
        }
        s
    }

    #[test]
    fn sigma_a_defaults() {
        let cfg = SweepConfig::from_settings(&settings(&[("experiment", "sigma_a")])).unwrap();
        assert_eq!(cfg.grid.len(), 25);
        assert_eq!(cfg.grid[0], 1e-2);
        assert_eq!(cfg.grid[24], 1e2);
        assert!((cfg.grid[12] - 1.0).abs() < 1e-12);
        assert_eq!(cfg.scale_set, vec![0.1, 1.0, 10.0]);
        assert_eq!((cfg.recipe.n, cfg.recipe.m, cfg.recipe.horizon), (5, 3, 10));
        assert_eq!((cfg.num_s1, cfg.num_traj), (100, 30));
    }

    #[test]
    fn b_mag_requires_square_input() {
        let cfg = SweepConfig::from_settings(&settings(&[("experiment", "b_mag")])).unwrap();
        assert_eq!(cfg.recipe.m, cfg.recipe.n);
        let err = SweepConfig::from_settings(&settings(&[("experiment", "b_mag"), ("m", "3")])).unwrap_err();
        assert!(matches!(err, crate::LabError::Config(_)));
    }

    #[test]
    fn rho_grid_is_linear_inside_unit_interval() {
        let cfg = SweepConfig::from_settings(&settings(&[("experiment", "rho")])).unwrap();
        assert_eq!(cfg.grid.first(), Some(&0.05));
        assert_eq!(cfg.grid.last(), Some(&0.95));
        assert!(cfg.grid.iter().any(|x| (x - 0.5).abs() < 1e-12));
        assert!(SweepConfig::from_settings(&settings(&[("experiment", "rho"), ("grid", "0.5,1.0")])).is_err());
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(Settings::new().set("bogus", "1").is_err());
        assert!(SweepConfig::from_settings(&Settings::new()).is_err());
        for bad in [
            [("experiment", "sigma_a"), ("grid", "1,0.5")],
            [("experiment", "sigma_a"), ("num_traj", "1")],
            [("experiment", "sigma_a"), ("num_s1", "0")],
            [("experiment", "sigma_a"), ("scales", "")],
            [("experiment", "sigma_a"), ("grid", "")],
            [("experiment", "curves"), ("target_rho", "1.5")],
            [("experiment", "sigma_a"), ("n", "x")],
        ] {
            assert!(SweepConfig::from_settings(&settings(&bad)).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn file_parsing_and_layering() {
        let mut s = Settings::parse("# comment\nexperiment = rho\n\nseed=4\nnum-s1 = 7\n").unwrap();
        assert_eq!(s.get("num_s1"), Some("7"));
        s.merge(&settings(&[("seed", "9")]));
        let cfg = SweepConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.recipe.seed, 9);
        assert_eq!(cfg.num_s1, 7);
        let err = Settings::parse("experiment=rho\nnot a pair\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn settings_round_trip() {
        for e in Experiment::ALL {
            let mut s = settings(&[("experiment", e.name()), ("seed", "3"), ("grid_points", "4"), ("out", "x.csv")]);
            if e == Experiment::BMag {
                s.set("m", "5").unwrap();
            }
            let cfg = SweepConfig::from_settings(&s).unwrap();
            let back = SweepConfig::from_settings(&Settings::parse(&cfg.to_settings().to_text()).unwrap()).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn grids() {
        assert_eq!(make_grid(1.0, 3.0, 3, GridSpacing::Linear).unwrap(), vec![1.0, 2.0, 3.0]);
        let g = make_grid(0.1, 10.0, 3, GridSpacing::Geometric).unwrap();
        assert!((g[1] - 1.0).abs() < 1e-15);
        assert_eq!(make_grid(2.0, 2.0, 1, GridSpacing::Linear).unwrap(), vec![2.0]);
        assert!(make_grid(0.0, 1.0, 3, GridSpacing::Geometric).is_err());
        assert!(make_grid(0.0, 1.0, 0, GridSpacing::Linear).is_err());
    }
}
