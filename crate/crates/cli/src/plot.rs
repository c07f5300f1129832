//! Static log-log SVG plots of CSV series with reference slope lines.

use std::fmt::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// Column whose values split the rows into separate lines.
    pub group: Option<String>,
    /// Reference slopes drawn through the middle of the first line.
    pub slopes: Vec<f64>,
    pub title: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> CliResult<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        CliError::Plot(format!(
            "column `{name}` not found in {} (columns: {})",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

/// Read the lines to plot; rows with non-positive or non-finite values are
/// dropped since they have no place on log axes.
pub fn read_lines(path: &Path, text: &str, spec: &PlotSpec) -> CliResult<Vec<Line>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| CliError::Parse {
        path: path.to_path_buf(),
        line: e.position().map(|p| p.line()).unwrap_or(1),
        message: e.to_string(),
    };
    let headers = rdr.headers().map_err(parse_err)?.clone();
    let xi = column(&headers, &spec.x, path)?;
    let yi = column(&headers, &spec.y, path)?;
    let gi = spec.group.as_deref().map(|g| column(&headers, g, path)).transpose()?;
    let mut lines: Vec<Line> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize, name: &str| -> CliResult<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column `{name}`: `{raw}` is not a number"),
            })
        };
        let (x, y) = (num(xi, &spec.x)?, num(yi, &spec.y)?);
        let label = match gi {
            Some(g) => format!("{} = {}", spec.group.as_deref().unwrap_or(""), rec.get(g).unwrap_or("")),
            None => spec.y.clone(),
        };
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            continue;
        }
        match lines.iter_mut().find(|l| l.label == label) {
            Some(l) => l.points.push((x, y)),
            None => lines.push(Line {
                label,
                points: vec![(x, y)],
            }),
        }
    }
    if lines.is_empty() {
        return Err(CliError::Plot(format!("{}: no positive samples to plot", path.display())));
    }
    Ok(lines)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn decade_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = (lo.log10().floor(), hi.log10().ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

pub fn render_svg(lines: &[Line], spec: &PlotSpec) -> String {
    let pts = || lines.iter().flat_map(|l| l.points.iter());
    let (x0, x1) = decade_range(pts().map(|p| p.0));
    let (y0, y1) = decade_range(pts().map(|p| p.1));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#
    );
    if let Some(t) = &spec.title {
        let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(t));
    }
    for k in (x0 as i32)..=(x1 as i32) {
        let x = LEFT + (k as f64 - x0) / (x1 - x0) * pw;
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{k}</text>"#, TOP + ph + 18.0);
    }
    for k in (y0 as i32)..=(y1 as i32) {
        let y = TOP + (y1 - k as f64) / (y1 - y0) * ph;
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 16.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y)
    );

    let mut legend = 0;
    let mut legend_entry = |s: &mut String, color: &str, dash: &str, label: &str| {
        let y = TOP + 10.0 + 18.0 * legend as f64;
        let x = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 24.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 30.0, y + 4.0, escape(label));
        legend += 1;
    };

    for (i, l) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = l.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline clip-path="url(#plot)" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        legend_entry(&mut s, color, "", &l.label);
    }

    let first = &lines[0].points;
    let (xm, ym) = first[first.len() / 2];
    let (xa, xb) = (10f64.powf(x0), 10f64.powf(x1));
    for &k in &spec.slopes {
        let (ya, yb) = (ym * (xa / xm).powf(k), ym * (xb / xm).powf(k));
        let _ = writeln!(
            s,
            r##"<line clip-path="url(#plot)" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
            sx(xa),
            sy(ya),
            sx(xb),
            sy(yb)
        );
        legend_entry(&mut s, "#555", r#" stroke-dasharray="6 4""#, &format!("slope {k}"));
    }
    s.push_str("</svg>\n");
    s
}

/// Read `csv_path`, render, and write `out`.
pub fn plot_file(csv_path: &Path, spec: &PlotSpec, out: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let lines = read_lines(csv_path, &text, spec)?;
    crate::artifacts::write_file(out, render_svg(&lines, spec).as_bytes())
}
