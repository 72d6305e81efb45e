//! CSV writers for run logs and signals, and standalone SVG line plots.

use std::fmt::Write as _;

use super::closed_loop::RunLog;
use super::sweep::{AxisValue, SweepTable};
use crate::trajlib::Signal;
use crate::{DeepcError, Result};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| DeepcError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Columns `t, u_1..u_m, y_1..y_p, objective, status, solve_ms`; `y` is the
/// noise-free output and empty cells mark steps without a solve.
pub fn runlog_csv(log: &RunLog) -> Result<String> {
    let (m, p) = log.records.first().map_or((0, log.y_ref.len()), |r| (r.u.len(), r.y.len()));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend((1..=p).map(|i| format!("y_{i}")));
    header.extend(["objective", "status", "solve_ms"].map(String::from));
    w.write_record(&header)?;
    for r in &log.records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.u.iter().map(|v| format!("{v:e}")));
        row.extend(r.y.iter().map(|v| format!("{v:e}")));
        row.push(r.objective.map(|v| format!("{v:e}")).unwrap_or_default());
        row.push(r.status.clone());
        row.push(r.solve_ms.map(|v| format!("{v:.3}")).unwrap_or_default());
        w.write_record(&row)?;
    }
    finish(w)
}

/// One row per time step, one column per channel.
pub fn signal_csv(s: &Signal<f64>, prefix: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=s.dim()).map(|i| format!("{prefix}_{i}")))?;
    for t in 0..s.len() {
        w.write_record(s.sample(t).iter().map(|v| format!("{v:e}")))?;
    }
    finish(w)
}

/// Header and numeric columns of a CSV file; non-numeric cells become NaN.
pub fn read_columns(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (j, cell) in rec.iter().enumerate().take(header.len()) {
            cols[j].push(cell.trim().parse::<f64>().unwrap_or(f64::NAN));
        }
    }
    Ok((header, cols))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only, no connecting line.
    pub scatter: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points, scatter: false }
    }

    pub fn scatter(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { name: name.into(), points, scatter: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        } else if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, `None` for values the axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            return (a..=b)
                .map(|e| e as f64)
                .filter(|e| *e >= self.lo - 1e-9 && *e <= self.hi + 1e-9)
                .map(|e| ((e - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|k| k * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut v = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while v <= self.hi + 1e-9 * step {
            let decimals = (-step.log10().floor()).max(0.0) as usize;
            let label = if v.abs() < 1e-9 * step {
                "0".to_string()
            } else if decimals > 4 || v.abs() >= 1e6 {
                format!("{v:.2e}")
            } else {
                format!("{v:.decimals$}")
            };
            out.push(((v - self.lo) / (self.hi - self.lo), label));
            v += step;
        }
        out
    }
}

fn draw_panel(svg: &mut String, panel: &Panel, top: f64) {
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = PANEL_HEIGHT - MARGIN_T - MARGIN_B;
    let (x0, y0) = (MARGIN_L, top + MARGIN_T);
    let xa = Axis::fit(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), panel.log_x);
    let ya = Axis::fit(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), panel.log_y);
    let _ = writeln!(svg, r##"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
    for (f, label) in xa.ticks() {
        let x = x0 + f * pw;
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
            y0 + ph,
            y0 + ph + 15.0,
            escape(&label)
        );
    }
    for (f, label) in ya.ticks() {
        let y = y0 + ph - f * ph;
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"##,
            x0 + pw,
            x0 - 5.0,
            y + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        y0 + ph + 34.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        y0 + ph / 2.0,
        y0 + ph / 2.0,
        escape(&panel.y_label)
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<Option<(f64, f64)>> = s
            .points
            .iter()
            .map(|&(x, y)| Some((x0 + xa.frac(x)? * pw, y0 + ph - ya.frac(y)? * ph)))
            .collect();
        if s.scatter {
            for (x, y) in pts.iter().flatten() {
                let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}" fill-opacity="0.6"/>"#);
            }
        } else {
            let mut d = String::new();
            let mut pen_down = false;
            for p in &pts {
                match p {
                    Some((x, y)) => {
                        let _ = write!(d, "{}{x:.2},{y:.2} ", if pen_down { "L" } else { "M" });
                        pen_down = true;
                    }
                    None => pen_down = false,
                }
            }
            let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        }
        let ly = y0 + 12.0 + 16.0 * k as f64;
        let lx = x0 + pw + 10.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="3" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            ly - 4.0,
            lx + 16.0,
            ly,
            escape(&s.name)
        );
    }
}

/// Self-contained SVG document with the panels stacked vertically.
pub fn svg_figure(title: &str, panels: &[Panel]) -> String {
    let height = 20.0 + PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, p, 10.0 + PANEL_HEIGHT * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Inputs and outputs against time from a `runlog.csv` text.
pub fn runlog_svg(csv_text: &str, title: &str) -> Result<String> {
    let (header, cols) = read_columns(csv_text)?;
    let t = header
        .iter()
        .position(|h| h == "t")
        .ok_or_else(|| DeepcError::Invalid("run log without a `t` column".into()))?;
    let panel = |prefix: &str, label: &str| Panel {
        x_label: "t".into(),
        y_label: label.into(),
        series: header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix))
            .map(|(j, h)| Series::line(h.clone(), cols[t].iter().copied().zip(cols[j].iter().copied()).collect()))
            .collect(),
        log_x: false,
        log_y: false,
    };
    Ok(svg_figure(title, &[panel("y_", "output"), panel("u_", "input")]))
}

/// Tracking error per trial (markers) and its median (line) against the
/// axis value. Structure values are placed at 0 (page) and 1 (hankel).
pub fn sweep_svg(table: &SweepTable, log_x: bool) -> String {
    let x_of = |v: AxisValue| match v {
        AxisValue::Real(x) => x,
        AxisValue::Count(c) => c as f64,
        AxisValue::Structure(s) => match s {
            crate::trajlib::Structure::Page => 0.0,
            crate::trajlib::Structure::Hankel => 1.0,
        },
    };
    let trials = table.rows.iter().filter_map(|r| r.tracking_error.map(|e| (x_of(r.value), e))).collect();
    let medians = table.median_errors().into_iter().map(|(v, e)| (x_of(v), e)).collect();
    let panel = Panel {
        x_label: table.axis.as_str().into(),
        y_label: "tracking error".into(),
        series: vec![Series::line("median", medians), Series::scatter("trials", trials)],
        log_x,
        log_y: true,
    };
    svg_figure(&format!("tracking error vs {}", table.axis), &[panel])
}
