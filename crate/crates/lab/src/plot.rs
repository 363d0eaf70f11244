//! Static SVG plots rendered from experiment CSV files.
//!
//! Output is a pure function of the CSV contents: coordinates are printed
//! with fixed precision and series appear in file order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::YScale;
use crate::error::{LabError, LabResult};
use crate::experiments::curve_bands;
use crate::table::{
    read_rows, read_schema, BandRow, CurveRow, ScatterRow, SweepRow, BANDS_SCHEMA, CURVES_SCHEMA, SCATTER_SCHEMA,
    SWEEP_SCHEMA,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotSpec {
    pub y_scale: YScale,
    /// Output file; defaults to the CSV path with an `.svg` extension.
    pub out: Option<PathBuf>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 340.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    style: Style,
    points: Vec<(f64, f64)>,
    /// `(x, low, high)` shaded around the line.
    band: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    x_log: bool,
    y_log: bool,
    diagonal: bool,
    series: Vec<Series>,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let t = if log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !lo.is_finite() {
            return None;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil().max(lo + 1.0);
        } else {
            let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.5 };
            lo -= pad;
            hi += pad;
        }
        Some(Axis { lo, hi, log })
    }

    fn t(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let x = if self.log { v.log10() } else { v };
        Some((x - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let span = (self.hi - self.lo).round() as i64;
            let step = (span / 8 + 1).max(1);
            let mut out = Vec::new();
            let mut e = self.lo.round() as i64;
            while e as f64 <= self.hi + 1e-9 {
                out.push(((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")));
                e += step;
            }
            return out;
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut v = (self.lo / step).ceil() * step;
        while v <= self.hi + 1e-12 * step {
            out.push(((v - self.lo) / (self.hi - self.lo), fmt_tick(v)));
            v += step;
        }
        out
    }
}

fn fmt_tick(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_svg(panels: &[Panel]) -> String {
    let height = panels.len() as f64 * (PANEL_HEIGHT + TOP + BOTTOM);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let y0 = i as f64 * (PANEL_HEIGHT + TOP + BOTTOM) + TOP;
        draw_panel(&mut svg, panel, y0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn draw_panel(svg: &mut String, panel: &Panel, y0: f64) {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = PANEL_HEIGHT;
    let xs = panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1).chain(s.band.iter().flat_map(|b| [b.1, b.2])));
    let (Some(mut xa), Some(mut ya)) = (Axis::fit(xs, panel.x_log), Axis::fit(ys, panel.y_log)) else {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}: no finite data</text>"#, LEFT, y0 + ph / 2.0, esc(&panel.title));
        return;
    };
    if panel.diagonal {
        let (lo, hi) = (xa.lo.min(ya.lo), xa.hi.max(ya.hi));
        xa = Axis { lo, hi, ..xa };
        ya = Axis { lo, hi, ..ya };
    }
    let px = |t: f64| LEFT + t * pw;
    let py = |t: f64| y0 + ph - t * ph;
    let _ = writeln!(svg, r##"<g class="panel">"##);
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"##,
        LEFT + pw / 2.0,
        y0 - 12.0,
        esc(&panel.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{y0:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333"/>"##
    );
    for (t, label) in xa.ticks() {
        let x = px(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, y0, y0 + ph);
        let _ = writeln!(svg, r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##, y0 + ph + 16.0, esc(&label));
    }
    for (t, label) in ya.ticks() {
        let y = py(t);
        let _ = writeln!(svg, r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##, LEFT - 6.0, y + 4.0, esc(&label));
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
        LEFT + pw / 2.0,
        y0 + ph + 36.0,
        esc(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"##,
        LEFT - 56.0,
        y0 + ph / 2.0,
        LEFT - 56.0,
        y0 + ph / 2.0,
        esc(&panel.y_label)
    );
    if panel.diagonal {
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="6 4"/>"##,
            px(0.0),
            py(0.0),
            px(1.0),
            py(1.0)
        );
    }
    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let band: Vec<(f64, f64, f64)> = s
            .band
            .iter()
            .filter_map(|&(x, lo, hi)| Some((xa.t(x)?, ya.t(lo)?, ya.t(hi)?)))
            .collect();
        if band.len() > 1 {
            let mut d = String::new();
            for (j, (x, _, hi)) in band.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, px(*x), py(*hi));
            }
            for (x, lo, _) in band.iter().rev() {
                let _ = write!(d, "L{:.2},{:.2} ", px(*x), py(*lo));
            }
            let _ = writeln!(svg, r##"<path d="{}Z" fill="{color}" fill-opacity="0.18" stroke="none"/>"##, d);
        }
        let mapped: Vec<Option<(f64, f64)>> =
            s.points.iter().map(|&(x, y)| Some((px(xa.t(x)?), py(ya.t(y)?)))).collect();
        match s.style {
            Style::Line => {
                // Missing points (flagged rows, non-positive values on a log axis) break the line.
                for run in mapped.split(|p| p.is_none()) {
                    let run: Vec<(f64, f64)> = run.iter().flatten().copied().collect();
                    if let [(x, y)] = run[..] {
                        let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"##);
                    } else if run.len() > 1 {
                        let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                        let _ = writeln!(
                            svg,
                            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"##,
                            pts.join(" ")
                        );
                    }
                }
            }
            Style::Markers => {
                for (x, y) in mapped.iter().flatten() {
                    let _ = writeln!(svg, r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"##);
                }
            }
        }
        let ly = y0 + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            svg,
            r##"<rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"##,
            ly - 6.0,
            lx + 20.0,
            ly,
            esc(&s.label)
        );
    }
    svg.push_str("</g>\n");
}

fn group_by<T, K: PartialEq + Copy>(rows: &[T], key: impl Fn(&T) -> K) -> Vec<(K, Vec<&T>)> {
    let mut out: Vec<(K, Vec<&T>)> = Vec::new();
    for r in rows {
        let k = key(r);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => out.push((k, vec![r])),
        }
    }
    out
}

fn sweep_panels(rows: &[SweepRow], y_log: bool) -> Vec<Panel> {
    let positive = rows.iter().all(|r| r.sweep_value > 0.0);
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.sweep_value), hi.max(r.sweep_value)));
    let x_log = positive && hi / lo >= 100.0;
    let groups = group_by(rows, |r| r.scale);
    let series = |f: fn(&SweepRow) -> f64| -> Vec<Series> {
        groups
            .iter()
            .map(|(scale, rs)| Series {
                label: format!("scale {}", fmt_tick(*scale)),
                style: Style::Line,
                points: rs.iter().map(|r| (r.sweep_value, if r.flagged { f64::NAN } else { f(r) })).collect(),
                band: Vec::new(),
            })
            .collect()
    };
    let panel = |title: &str, y_label: &str, series| Panel {
        title: title.into(),
        x_label: "sweep value".into(),
        y_label: y_label.into(),
        x_log,
        y_log,
        diagonal: false,
        series,
    };
    vec![
        panel("Upper bound", "bound on E[tr(g'g)]", series(|r| r.bound_mean)),
        panel("Empirical variance", "nu(g)", series(|r| r.empirical_nu_mean)),
    ]
}

fn scatter_panel(rows: &[ScatterRow]) -> Panel {
    let series = group_by(rows, |r| r.n)
        .into_iter()
        .map(|(n, rs)| Series {
            label: format!("n = {n}"),
            style: Style::Markers,
            points: rs
                .iter()
                .filter(|r| !r.flagged)
                .map(|r| (r.empirical_second_moment_mean, r.bound_mean))
                .collect(),
            band: Vec::new(),
        })
        .collect();
    Panel {
        title: "Bound versus empirical second moment".into(),
        x_label: "empirical E[tr(g'g)]".into(),
        y_label: "upper bound".into(),
        x_log: true,
        y_log: true,
        diagonal: true,
        series,
    }
}

fn bands_panel(bands: &[BandRow]) -> Panel {
    let series = group_by(bands, |b| (b.sigma_a_scale, b.sigma_s_scale))
        .into_iter()
        .map(|((sa, ss), bs)| Series {
            label: format!("sa {} / ss {}", fmt_tick(sa), fmt_tick(ss)),
            style: Style::Line,
            points: bs.iter().map(|b| (b.iteration as f64, b.eval_mean)).collect(),
            band: bs
                .iter()
                .map(|b| (b.iteration as f64, b.eval_mean - b.eval_std, b.eval_mean + b.eval_std))
                .collect(),
        })
        .collect();
    Panel {
        title: "Noise-free evaluation return".into(),
        x_label: "iteration".into(),
        y_label: "mean return".into(),
        x_log: false,
        y_log: false,
        diagonal: false,
        series,
    }
}

fn no_rows(path: &Path) -> LabError {
    LabError::Schema {
        path: path.to_path_buf(),
        row: 2,
        column: "-".into(),
        msg: "no data rows".into(),
    }
}

/// Renders the plot for an experiment CSV and returns the written SVG path.
pub fn render_plots(csv_path: &Path, spec: &PlotSpec) -> LabResult<PathBuf> {
    let schema = read_schema(csv_path)?;
    let y_log = spec.y_scale == YScale::Log;
    let panels = match schema.as_str() {
        SWEEP_SCHEMA => {
            let rows: Vec<SweepRow> = read_rows(csv_path, SWEEP_SCHEMA)?;
            if rows.is_empty() {
                return Err(no_rows(csv_path));
            }
            sweep_panels(&rows, y_log)
        }
        SCATTER_SCHEMA => {
            let rows: Vec<ScatterRow> = read_rows(csv_path, SCATTER_SCHEMA)?;
            if rows.is_empty() {
                return Err(no_rows(csv_path));
            }
            vec![scatter_panel(&rows)]
        }
        CURVES_SCHEMA => {
            let rows: Vec<CurveRow> = read_rows(csv_path, CURVES_SCHEMA)?;
            if rows.is_empty() {
                return Err(no_rows(csv_path));
            }
            vec![bands_panel(&curve_bands(&rows))]
        }
        BANDS_SCHEMA => {
            let rows: Vec<BandRow> = read_rows(csv_path, BANDS_SCHEMA)?;
            if rows.is_empty() {
                return Err(no_rows(csv_path));
            }
            vec![bands_panel(&rows)]
        }
        other => {
            return Err(LabError::Schema {
                path: csv_path.to_path_buf(),
                row: 1,
                column: "-".into(),
                msg: format!("unknown schema {other}"),
            })
        }
    };
    let out = spec.out.clone().unwrap_or_else(|| csv_path.with_extension("svg"));
    fs::write(&out, render_svg(&panels)).map_err(|e| LabError::io(&out, e))?;
    Ok(out)
}
