//! Minimal line-plot writer for result tables.

use std::fmt::Write;

use crate::report::{PlotSpec, Table};
use crate::CliError;

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn column(t: &Table, name: &str) -> Result<usize, CliError> {
    t.columns.iter().position(|c| c == name).ok_or_else(|| CliError::Config(format!("no column `{name}` to plot")))
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders the plotted columns as polylines over the x column.
pub fn plot(t: &Table, p: &PlotSpec) -> Result<String, CliError> {
    let xi = column(t, &p.x)?;
    let yis = p.y.iter().map(|y| column(t, y)).collect::<Result<Vec<_>, _>>()?;
    let (mut x0, mut x1) = range(t.rows.iter().map(|r| r[xi]));
    let (mut y0, mut y1) = range(t.rows.iter().flat_map(|r| yis.iter().map(move |&i| r[i])));
    let (pw, ph) = (W - 2.0 * M, H - 2.0 * M);
    if p.equal_axes {
        let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        (x0, x1, y0, y1) = (cx - scale * pw / 2.0, cx + scale * pw / 2.0, cy - scale * ph / 2.0, cy + scale * ph / 2.0);
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * ph;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&p.title));
    let _ = writeln!(s, r#"<rect x="{M}" y="{M}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sx(xv), H - M + 16.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, M - 4.0, sy(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(&p.x));
    for (k, &yi) in yis.iter().enumerate() {
        let pts: Vec<String> = t.rows.iter().filter(|r| r[xi].is_finite() && r[yi].is_finite()).map(|r| format!("{:.2},{:.2}", sx(r[xi]), sy(r[yi]))).collect();
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, M + 8.0, M + 16.0 * (k as f64 + 1.0), escape(&p.y[k]));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
