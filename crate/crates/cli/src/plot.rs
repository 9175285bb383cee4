//! Line plots of metrics CSVs, emitted directly as SVG.
//!
//! Every record becomes exactly one polyline vertex, so a plot can be checked
//! against its CSV without rendering it.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: row {row}, column `{column}`: cannot read {value:?} as a finite number")]
    BadValue { path: String, row: usize, column: String, value: String },
    #[error("nothing to plot")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    /// One series per CSV.
    Interactivity,
    /// One series per logged action component of each CSV.
    Actions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub const ACTION_COLUMNS: [&str; 8] = ["b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7"];

/// Reads `step` plus the named columns from a metrics CSV.
pub fn read_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<(f64, f64)>>, PlotError> {
    let name = path.display().to_string();
    let csv_err = |source| PlotError::Csv { path: name.clone(), source };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let index = |col: &str| {
        headers.iter().position(|h| h == col).ok_or_else(|| PlotError::MissingColumn { path: name.clone(), column: col.into() })
    };
    let step_idx = index("step")?;
    let idx: Vec<usize> = columns.iter().map(|c| index(c)).collect::<Result<_, _>>()?;
    let mut out = vec![Vec::new(); columns.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let get = |i: usize, col: &str| -> Result<f64, PlotError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| PlotError::BadValue {
                path: name.clone(),
                row: row + 1,
                column: col.into(),
                value: raw.into(),
            })
        };
        let step = get(step_idx, "step")?;
        for (k, (&i, col)) in idx.iter().zip(columns).enumerate() {
            out[k].push((step, get(i, col)?));
        }
    }
    Ok(out)
}

pub fn load_series(paths: &[&Path], kind: PlotKind, column: &str) -> Result<Vec<Series>, PlotError> {
    let mut series = Vec::new();
    for path in paths {
        let stem =
            path.parent().and_then(|p| p.file_name()).or(path.file_stem()).map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        match kind {
            PlotKind::Interactivity => {
                let mut cols = read_columns(path, &[column])?;
                series.push(Series { label: stem, points: cols.remove(0) });
            }
            PlotKind::Actions => {
                for (col, points) in ACTION_COLUMNS.iter().zip(read_columns(path, &ACTION_COLUMNS)?) {
                    let label = if paths.len() == 1 { col.to_string() } else { format!("{stem}:{col}") };
                    series.push(Series { label, points });
                }
            }
        }
    }
    if series.is_empty() {
        return Err(PlotError::Empty);
    }
    Ok(series)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series on shared axes labelled `step` and `value`.
pub fn render_svg(series: &[Series], title: &str) -> String {
    let (w, h) = (900.0, 520.0);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 60.0);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let (pw, ph) = (w - left - right, h - top - bottom);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{left}" y1="{}" x2="{}" y2="{}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/></g>"#,
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ =
            writeln!(svg, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{text}</text>"#);
    };
    label(&mut svg, left, top + ph + 18.0, "middle", format!("{x0}"));
    label(&mut svg, left + pw, top + ph + 18.0, "middle", format!("{x1}"));
    label(&mut svg, left - 6.0, top + ph, "end", format!("{y0:.4}"));
    label(&mut svg, left - 6.0, top + 10.0, "end", format!("{y1:.4}"));
    label(&mut svg, left + pw / 2.0, h - 16.0, "middle", "step".into());
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 20 {:.2})">value</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
            escape(&s.label),
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, lx + 20.0);
        label(&mut svg, lx + 26.0, ly + 4.0, "start", escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Number of vertices of every polyline in an SVG produced by [`render_svg`].
pub fn polyline_point_counts(svg: &str) -> Vec<usize> {
    svg.lines()
        .filter(|l| l.trim_start().starts_with("<polyline"))
        .map(|l| {
            let start = l.find("points=\"").map(|i| i + 8).unwrap_or(l.len());
            let body = &l[start..];
            let body = &body[..body.find('"').unwrap_or(body.len())];
            body.split_whitespace().count()
        })
        .collect()
}
