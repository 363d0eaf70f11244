//! CSV files with a one-line versioned schema header.
//!
//! Every file starts with `# schema: <name>/<version>`, followed by an
//! ordinary CSV header row and the data rows.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub const SWEEP_SCHEMA: &str = "lqrlab-sweep/1";
pub const SCATTER_SCHEMA: &str = "lqrlab-scatter/1";
pub const CURVES_SCHEMA: &str = "lqrlab-curves/1";
pub const BANDS_SCHEMA: &str = "lqrlab-curve-bands/1";

const SCHEMA_PREFIX: &str = "# schema: ";

/// One point of a one-parameter sweep, averaged over initial states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub scale: f64,
    pub bound_mean: f64,
    pub empirical_nu_mean: f64,
    pub empirical_second_moment_mean: f64,
    pub nu_std_error: f64,
    pub rho_achieved: f64,
    pub second_moment_std_error: f64,
    pub flagged: bool,
}

/// One random problem of the dimensionality scatter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub empirical_second_moment_mean: f64,
    pub bound_mean: f64,
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub problem: usize,
    pub second_moment_std_error: f64,
    pub empirical_nu_mean: f64,
    pub nu_std_error: f64,
    pub rho: f64,
    pub flagged: bool,
}

/// One checkpoint of one REINFORCE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub sigma_a_scale: f64,
    pub sigma_s_scale: f64,
    pub seed_index: usize,
    pub iteration: usize,
    pub eval_return: f64,
    pub train_return: f64,
    pub diverged: bool,
}

/// Mean and standard deviation across seeds at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub sigma_a_scale: f64,
    pub sigma_s_scale: f64,
    pub iteration: usize,
    pub eval_mean: f64,
    pub eval_std: f64,
    pub runs: usize,
    pub diverged_runs: usize,
}

/// Serializes rows under a schema header; the file is written in one piece.
pub fn write_rows<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> LabResult<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{SCHEMA_PREFIX}{schema}").expect("writing to memory");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(|e| LabError::Numerical(format!("cannot serialize row: {e}")))?;
        }
        w.flush().map_err(|e| LabError::io(path, e))?;
    }
    if rows.is_empty() {
        return Err(LabError::Numerical(format!("no rows to write to {}", path.display())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(path, buf).map_err(|e| LabError::io(path, e))
}

/// Schema name of a CSV file, from its first line.
pub fn read_schema(path: &Path) -> LabResult<String> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    split_schema(path, &text).map(|(s, _)| s.to_string())
}

fn split_schema<'a>(path: &Path, text: &'a str) -> LabResult<(&'a str, &'a str)> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let schema = first.trim_end().strip_prefix(SCHEMA_PREFIX).ok_or_else(|| LabError::Schema {
        path: path.to_path_buf(),
        row: 1,
        column: "-".into(),
        msg: "missing '# schema:' header line".into(),
    })?;
    Ok((schema, body))
}

/// Reads rows of the expected schema. Errors carry the 1-based file line
/// and the column name.
pub fn read_rows<T: DeserializeOwned>(path: &Path, expected: &str) -> LabResult<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let (schema, body) = split_schema(path, &text)?;
    if schema != expected {
        return Err(LabError::Schema {
            path: path.to_path_buf(),
            row: 1,
            column: "-".into(),
            msg: format!("expected schema {expected}, found {schema}"),
        });
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| schema_error(path, &e, &csv::StringRecord::new()))?
        .clone();
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        rows.push(rec.map_err(|e| schema_error(path, &e, &headers))?);
    }
    Ok(rows)
}

fn schema_error(path: &Path, e: &csv::Error, headers: &csv::StringRecord) -> LabError {
    // The schema line precedes the CSV body, hence the +1.
    let row = e.position().map_or(0, |p| p.line() + 1);
    let (column, msg) = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => {
            let column = err
                .field()
                .and_then(|i| headers.get(i as usize))
                .map_or_else(|| "-".to_string(), str::to_string);
            (column, err.kind().to_string())
        }
        _ => ("-".to_string(), e.to_string()),
    };
    LabError::Schema {
        path: path.to_path_buf(),
        row,
        column,
        msg,
    }
}
