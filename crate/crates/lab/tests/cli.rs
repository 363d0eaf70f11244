use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lqrlab::table::{read_rows, read_schema, SweepRow, SWEEP_SCHEMA};

fn lqrlab(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqrlab"))
        .args(args)
        .env("LQRLAB_OUT_DIR", out_dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn small_sweep_writes_csv_metadata_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = lqrlab(
        &["run", "--experiment", "sigma_a", "--grid-points", "3", "--scales", "1", "--num-s1", "2", "--num-traj", "4", "--render"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("sigma_a.csv");
    assert_eq!(read_schema(&csv).unwrap(), SWEEP_SCHEMA);
    let rows: Vec<SweepRow> = read_rows(&csv, SWEEP_SCHEMA).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(dir.path().join("sigma_a.svg").exists());
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sigma_a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "sigma_a");
    assert_eq!(meta["rows"], 3);
    assert!(meta.get("step_size").is_none());

    let replay = dir.path().join("replay.cfg");
    fs::write(&replay, meta["config_file"].as_str().unwrap()).unwrap();
    let again = dir.path().join("again.csv");
    let o = lqrlab(&["run", "--config", replay.to_str().unwrap(), "--out", again.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "experiment=sigma_a\nno_such_key=1\n").unwrap();
    let o = lqrlab(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = lqrlab(&["run", "--experiment", "b_mag", "--n", "4", "--m", "2"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| e.unwrap().path() == bad));
}

#[test]
fn diverged_curves_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = lqrlab(
        &[
            "run",
            "--experiment",
            "curves",
            "--n",
            "3",
            "--m",
            "2",
            "--set",
            "curve_sigma_a=1",
            "--set",
            "curve_sigma_s=1",
            "--set",
            "curve_seeds=1",
            "--set",
            "steps=20",
            "--set",
            "step_size=1",
            "--set",
            "num_eval_states=5",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("curves_bands.csv").exists());
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("curves.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["step_size"]["step_size"], 1.0);
    assert!(meta["flagged_rows"].as_u64().unwrap() > 0);
}

#[test]
fn render_rejects_a_table_without_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(
        &csv,
        "# schema: lqrlab-sweep/1\nsweep_value,scale,bound_mean,empirical_nu_mean,empirical_second_moment_mean,nu_std_error,rho_achieved,second_moment_std_error,flagged\n",
    )
    .unwrap();
    let o = lqrlab(&["render", csv.to_str().unwrap()], dir.path());
    assert_ne!(code(&o), 0);
    assert!(!dir.path().join("empty.svg").exists());
}

#[test]
fn generated_problem_rolls_out_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.txt");
    let o = lqrlab(&["gen-problem", "--n", "2", "--m", "1", "--horizon", "4", "--seed", "3", "--out", problem.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0);
    let args = ["rollout", problem.to_str().unwrap(), "--s1", "1,-1", "--seed", "5"];
    let a = lqrlab(&args, dir.path());
    let b = lqrlab(&args, dir.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);

    let o = lqrlab(&["rollout", problem.to_str().unwrap(), "--s1", "1"], dir.path());
    assert_ne!(code(&o), 0);
}
