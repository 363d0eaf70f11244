use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lqrlab::config::{known_keys, YScale};
use lqrlab::plot::{render_plots, PlotSpec};
use lqrlab::runner::execute;
use lqrlab::{exit, LabError, LabResult, RunOptions, Settings, SweepConfig};
use lqrpg::lqrmodel::{parse_problem, write_problem, ProblemFile};
use lqrpg::probgen::{random_lqr, ProblemRecipe};
use lqrpg::rollout::{rollout, rollout_deterministic};
use lqrpg::{RngKey, StreamContext};

#[derive(Parser)]
#[command(name = "lqrlab", version, about = "Variance experiments for REINFORCE on random LQR problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV, metadata and optional plot.
    Run(RunArgs),
    /// Render the SVG plot of an experiment CSV.
    Render {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "log")]
        y_scale: YScale,
    },
    /// Sample a random problem and print it in the text problem format.
    GenProblem {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        sigma_s_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_a_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one trajectory of a problem file and print it as CSV.
    Rollout {
        /// Problem file including a policy.
        problem: PathBuf,
        /// Comma-separated initial state.
        #[arg(long)]
        s1: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trajectory: u64,
        /// Simulate without any noise.
        #[arg(long)]
        noise_free: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the configuration keys.
    Keys,
}

#[derive(Args)]
struct RunArgs {
    /// Config file of key=value lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    grid_min: Option<String>,
    #[arg(long)]
    grid_max: Option<String>,
    #[arg(long)]
    grid_points: Option<String>,
    /// Comma-separated noise-scale family.
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    num_s1: Option<String>,
    #[arg(long)]
    num_traj: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot.
    #[arg(long)]
    render: bool,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    y_scale: Option<String>,
    /// Any other setting, as KEY=VALUE (repeatable; see `lqrlab keys`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn settings(&self) -> LabResult<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::new(),
        };
        let mut flags = Settings::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            flags.set(k, v)?;
        }
        let named = [
            ("experiment", &self.experiment),
            ("seed", &self.seed),
            ("n", &self.n),
            ("m", &self.m),
            ("horizon", &self.horizon),
            ("grid_min", &self.grid_min),
            ("grid_max", &self.grid_max),
            ("grid_points", &self.grid_points),
            ("scales", &self.scales),
            ("num_s1", &self.num_s1),
            ("num_traj", &self.num_traj),
            ("threads", &self.threads),
            ("y_scale", &self.y_scale),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                flags.set(k, v)?;
            }
        }
        if let Some(out) = &self.out {
            flags.set("out", &out.display().to_string())?;
        }
        if self.render {
            flags.set("render", "true")?;
        }
        s.merge(&flags);
        Ok(s)
    }
}

fn write_or_print(out: Option<&PathBuf>, text: &str) -> LabResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| LabError::Io { path: path.clone(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_state(text: &str) -> LabResult<Vec<f64>> {
    text.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| LabError::Config(format!("bad --s1 entry '{x}': {e}"))))
        .collect()
}

fn main_inner(cli: Cli) -> LabResult<i32> {
    match cli.command {
        Command::Run(args) => {
            let settings = args.settings()?;
            let cfg = SweepConfig::from_settings(&settings)?;
            let opts = RunOptions::from_settings(&settings)?;
            let report = execute(&cfg, &opts)?;
            println!("wrote {} ({} rows, {} flagged)", report.csv.display(), report.rows, report.flagged_rows);
            for extra in [&report.extra_csv, &report.svg].into_iter().flatten() {
                println!("wrote {}", extra.display());
            }
            println!("wrote {}", report.metadata.display());
            Ok(report.exit_code())
        }
        Command::Render { csv, out, y_scale } => {
            let svg = render_plots(&csv, &PlotSpec { y_scale, out })?;
            println!("wrote {}", svg.display());
            Ok(exit::SUCCESS)
        }
        Command::GenProblem { n, m, horizon, seed, sigma_s_scale, sigma_a_scale, out } => {
            let recipe = ProblemRecipe { n, m, horizon, sigma_s_scale, sigma_a_scale, seed };
            let (problem, policy) = random_lqr(&recipe)?;
            let file = ProblemFile { problem, policy: Some(policy), comments: vec![recipe.describe()] };
            write_or_print(out.as_ref(), &write_problem(&file))?;
            Ok(exit::SUCCESS)
        }
        Command::Rollout { problem, s1, seed, trajectory, noise_free, out } => {
            let text = std::fs::read_to_string(&problem).map_err(|e| LabError::Io { path: problem.clone(), source: e })?;
            let file = parse_problem(&text)?;
            let policy = file.policy.ok_or_else(|| LabError::Config("the problem file has no policy section".into()))?;
            let s1 = parse_state(&s1)?;
            let traj = if noise_free {
                rollout_deterministic(&file.problem, &policy.k, &s1)?
            } else {
                let key = RngKey::new(seed, StreamContext::Rollout).with_trajectory(trajectory);
                rollout(&file.problem, &policy, &s1, key)?
            };
            let mut buf = Vec::new();
            traj.write_csv(&mut buf).expect("writing to memory");
            write_or_print(out.as_ref(), &String::from_utf8_lossy(&buf))?;
            Ok(exit::SUCCESS)
        }
        Command::Keys => {
            for (k, help) in known_keys() {
                println!("{k:<16} {help}");
            }
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
