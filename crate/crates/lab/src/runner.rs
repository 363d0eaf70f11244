//! Executes a configured experiment: runs it on a sized thread pool, writes
//! the CSV (plus a band CSV for learning curves), an optional SVG and a
//! JSON metadata sidecar.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{RunOptions, SweepConfig};
use crate::error::{exit, LabError, LabResult};
use crate::experiments::{self, Output, StepChoice};
use crate::plot::{render_plots, PlotSpec};
use crate::table::{write_rows, BANDS_SCHEMA, CURVES_SCHEMA, SCATTER_SCHEMA, SWEEP_SCHEMA};

/// Reproduction record written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub seed: u64,
    pub schema: &'static str,
    pub csv: String,
    pub rows: usize,
    pub flagged_rows: usize,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_time_seconds: f64,
    /// `key=value` text that reproduces the CSV when passed as `--config`.
    pub config_file: String,
    pub config: SweepConfig,
    /// Learning curves only: the step size used and the pilot search behind it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<StepChoice>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv: PathBuf,
    pub extra_csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub metadata: PathBuf,
    pub rows: usize,
    pub flagged_rows: usize,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.flagged_rows > 0 {
            exit::PARTIAL
        } else {
            exit::SUCCESS
        }
    }
}

/// `<stem>.meta.json` next to the CSV.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// `<stem>_bands.csv` next to the learning-curve CSV.
pub fn bands_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}_bands.csv"))
}

/// Runs the experiment on a pool of `threads` workers.
pub fn run_with_threads(cfg: &SweepConfig, threads: usize) -> LabResult<Output> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| experiments::run(cfg))
}

pub fn execute(cfg: &SweepConfig, opts: &RunOptions) -> LabResult<RunReport> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let output = run_with_threads(cfg, opts.threads)?;
    let csv = cfg.out_path.clone();
    let mut extra_csv = None;
    let schema = match &output {
        Output::Sweep(rows) => {
            write_rows(&csv, SWEEP_SCHEMA, rows)?;
            SWEEP_SCHEMA
        }
        Output::Scatter(rows) => {
            write_rows(&csv, SCATTER_SCHEMA, rows)?;
            SCATTER_SCHEMA
        }
        Output::Curves { runs, bands, .. } => {
            write_rows(&csv, CURVES_SCHEMA, runs)?;
            let path = bands_path(&csv);
            write_rows(&path, BANDS_SCHEMA, bands)?;
            extra_csv = Some(path);
            CURVES_SCHEMA
        }
    };
    let svg = if opts.render {
        let source = extra_csv.as_deref().unwrap_or(&csv);
        let spec = PlotSpec {
            y_scale: opts.y_scale,
            out: Some(csv.with_extension("svg")),
        };
        Some(render_plots(source, &spec)?)
    } else {
        None
    };
    let meta = RunMetadata {
        tool: "lqrlab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.recipe.seed,
        schema,
        csv: csv.display().to_string(),
        rows: output.len(),
        flagged_rows: output.flagged_rows(),
        threads: opts.threads,
        started_unix_seconds: started,
        wall_time_seconds: clock.elapsed().as_secs_f64(),
        config_file: cfg.to_settings().to_text(),
        config: cfg.clone(),
        step_size: match &output {
            Output::Curves { step, .. } => Some(step.clone()),
            _ => None,
        },
    };
    let metadata = metadata_path(&csv);
    let json = serde_json::to_string_pretty(&meta).map_err(|e| LabError::Numerical(e.to_string()))?;
    std::fs::write(&metadata, json + "\n").map_err(|e| LabError::io(&metadata, e))?;
    Ok(RunReport {
        csv,
        extra_csv,
        svg,
        metadata,
        rows: meta.rows,
        flagged_rows: meta.flagged_rows,
    })
}
