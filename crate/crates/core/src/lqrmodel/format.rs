//! Plain-text key/value problem files.
//!
//! ```text
//! # free-form comment lines
//! format = lqr-problem/1
//! n = 2
//! m = 1
//! horizon = 10
//! a = 1.0000000000000000e0 0.0000000000000000e0 ...
//! b = ...
//! q = ...
//! r = ...
//! sigma_s = ...
//! k = ...            (optional, with sigma_a)
//! sigma_a = ...
//! ```
//!
//! Matrices are row-major with 17 significant digits, which round-trips
//! every finite `f64` exactly.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{GaussianPolicy, LqrProblem};
use crate::ctrlmath::Mat;
use crate::error::{Error, Result};

const FORMAT_TAG: &str = "lqr-problem/1";

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: LqrProblem,
    pub policy: Option<GaussianPolicy>,
    /// Comment lines without the leading `# `.
    pub comments: Vec<String>,
}

fn write_mat(out: &mut String, key: &str, m: &Mat) {
    let _ = write!(out, "{key} =");
    for x in m.to_row_major() {
        let _ = write!(out, " {x:.16e}");
    }
    out.push('\n');
}

pub fn write_problem(file: &ProblemFile) -> String {
    let mut out = String::new();
    for c in &file.comments {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    let p = &file.problem;
    let _ = writeln!(out, "format = {FORMAT_TAG}");
    let _ = writeln!(out, "n = {}", p.n());
    let _ = writeln!(out, "m = {}", p.m());
    let _ = writeln!(out, "horizon = {}", p.horizon);
    write_mat(&mut out, "a", &p.a);
    write_mat(&mut out, "b", &p.b);
    write_mat(&mut out, "q", &p.q);
    write_mat(&mut out, "r", &p.r);
    write_mat(&mut out, "sigma_s", &p.sigma_s);
    if let Some(pol) = &file.policy {
        write_mat(&mut out, "k", &pol.k);
        write_mat(&mut out, "sigma_a", &pol.sigma_a);
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let mut comments = Vec::new();
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_string();
        if fields.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
            return Err(perr(line_no, format!("duplicate key `{key}`")));
        }
    }
    let take = |key: &str| -> Result<(usize, &str)> {
        fields
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| perr(0, format!("missing key `{key}`")))
    };
    let (line, tag) = take("format")?;
    if tag != FORMAT_TAG {
        return Err(perr(line, format!("unsupported format `{tag}`")));
    }
    let int = |key: &str| -> Result<usize> {
        let (line, v) = take(key)?;
        v.parse::<usize>()
            .map_err(|e| perr(line, format!("`{key}`: {e}")))
    };
    let n = int("n")?;
    let m = int("m")?;
    let horizon = int("horizon")?;
    let mat = |key: &str, rows: usize, cols: usize| -> Result<Mat> {
        let (line, v) = take(key)?;
        let vals = v
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|e| perr(line, format!("`{key}`: bad number `{tok}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        Mat::new(rows, cols, &vals).map_err(|e| perr(line, format!("`{key}`: {e}")))
    };
    let problem = LqrProblem {
        a: mat("a", n, n)?,
        b: mat("b", n, m)?,
        q: mat("q", n, n)?,
        r: mat("r", m, m)?,
        sigma_s: mat("sigma_s", n, n)?,
        horizon,
    };
    let policy = match (fields.contains_key("k"), fields.contains_key("sigma_a")) {
        (false, false) => None,
        (true, true) => Some(GaussianPolicy {
            k: mat("k", m, n)?,
            sigma_a: mat("sigma_a", m, m)?,
        }),
        _ => return Err(perr(0, "`k` and `sigma_a` must appear together")),
    };
    Ok(ProblemFile { problem, policy, comments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(vals: &[f64]) -> ProblemFile {
        let m = |r, c, off: usize| Mat::new(r, c, &vals[off..off + r * c]).unwrap();
        ProblemFile {
            problem: LqrProblem {
                a: m(2, 2, 0),
                b: m(2, 1, 4),
                q: m(2, 2, 6),
                r: m(1, 1, 10),
                sigma_s: m(2, 2, 11),
                horizon: 7,
            },
            policy: Some(GaussianPolicy {
                k: m(1, 2, 15),
                sigma_a: m(1, 1, 17),
            }),
            comments: vec!["recipe seed=3".into()],
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 18)) {
            let f = sample(&vals);
            let back = parse_problem(&write_problem(&f)).unwrap();
            let bits = |m: &Mat| m.to_row_major().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back.problem.a), bits(&f.problem.a));
            prop_assert_eq!(bits(&back.problem.sigma_s), bits(&f.problem.sigma_s));
            prop_assert_eq!(bits(&back.policy.as_ref().unwrap().k), bits(&f.policy.as_ref().unwrap().k));
            prop_assert_eq!(back, f);
        }
    }

    #[test]
    fn reports_line_of_bad_number() {
        let text = write_problem(&sample(&[1.0; 18])).replace("q = 1", "q = x1");
        match parse_problem(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_key_and_wrong_count() {
        let text = write_problem(&sample(&[1.0; 18]));
        let no_r: String = text.lines().filter(|l| !l.starts_with("r =")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_problem(&no_r), Err(Error::Parse { .. })));
        let short = text.replace("horizon = 7", "horizon = 7\nn_extra = 1").replace("n = 2", "n = 3");
        assert!(matches!(parse_problem(&short), Err(Error::Parse { .. })));
    }
}
