//! Self-contained SVG rendering of a sweep: one panel per scenario, mean
//! relative error (log scale) against mean SNR in dB, one polyline per
//! method.

use std::fmt::Write as _;
use std::path::Path;

use super::sweep::{CellSummary, Scenario, SweepResult};
use crate::error::{Error, Result};
use crate::optimize::FormulationKind;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
/// Errors below this are drawn at this value on the log axis.
const ERROR_FLOOR: f64 = 1e-16;

fn color(method: FormulationKind) -> &'static str {
    match method {
        FormulationKind::Conventional => "#1f77b4",
        FormulationKind::Generative => "#d62728",
        FormulationKind::Combined => "#2ca02c",
    }
}

/// Maps `v` from `[lo, hi]` onto `[a, b]`; a degenerate range maps to the
/// midpoint.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        0.5 * (a + b)
    }
}

struct Series {
    method: FormulationKind,
    /// `(snr_db, log10 error)` sorted by SNR.
    points: Vec<(f64, f64)>,
}

fn panel_series(cells: &[CellSummary], scenario: Scenario) -> Vec<Series> {
    let mut methods: Vec<FormulationKind> = Vec::new();
    for c in cells.iter().filter(|c| c.scenario == scenario) {
        if !methods.contains(&c.method) {
            methods.push(c.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let mut points: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| {
                    c.scenario == scenario && c.method == method && c.mean_snr_db.is_finite()
                })
                .map(|c| (c.mean_snr_db, c.mean_error.max(ERROR_FLOOR).log10()))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { method, points }
        })
        .collect()
}

fn draw_panel(out: &mut String, scenario: Scenario, series: &[Series], x0: f64) {
    let (left, right) = (x0 + MARGIN_L, x0 + PANEL_W - MARGIN_R);
    let (top, bottom) = (MARGIN_T, PANEL_H - MARGIN_B);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        xlo = xlo.min(x);
        xhi = xhi.max(x);
        ylo = ylo.min(y);
        yhi = yhi.max(y);
    }
    // Whole decades on the error axis.
    let (ylo, yhi) = if ylo.is_finite() {
        (ylo.floor(), yhi.ceil().max(ylo.floor() + 1.0))
    } else {
        (-1.0, 0.0)
    };
    let (xlo, xhi) = if xlo.is_finite() {
        (xlo, xhi)
    } else {
        (0.0, 1.0)
    };

    let _ = writeln!(out, r#"<g class="panel" data-scenario="{scenario}">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{scenario}</text>"#,
        (left + right) / 2.0
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#000"/>"##,
        right - left,
        bottom - top
    );
    let mut decade = ylo;
    while decade <= yhi {
        let y = scale(decade, ylo, yhi, bottom, top);
        let _ = writeln!(
            out,
            r##"<line x1="{left:.1}" y1="{y:.2}" x2="{right:.1}" y2="{y:.2}" stroke="#ddd"/><text x="{:.1}" y="{:.2}" text-anchor="end" font-size="10">1e{}</text>"##,
            left - 4.0,
            y + 3.0,
            decade as i64
        );
        decade += 1.0;
    }
    for (i, v) in [xlo, xhi].into_iter().enumerate() {
        let x = if i == 0 { left } else { right };
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{v:.1}</text>"#,
            bottom + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">SNR (dB)</text>"#,
        (left + right) / 2.0,
        bottom + 32.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.1} {:.1})">relative error</text>"#,
        x0 + 16.0,
        (top + bottom) / 2.0,
        x0 + 16.0,
        (top + bottom) / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                format!(
                    "{:.3},{:.3}",
                    scale(x, xlo, xhi, left, right),
                    scale(y, ylo, yhi, bottom, top)
                )
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-method="{m}" fill="none" stroke="{c}" stroke-width="1.5" points="{p}"/>"#,
            m = s.method,
            c = color(s.method),
            p = points.join(" ")
        );
        let ly = top + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{c}" stroke-width="1.5"/><text class="legend" x="{:.1}" y="{:.1}" font-size="10">{m}</text>"#,
            right - 96.0,
            right - 80.0,
            right - 76.0,
            ly + 3.0,
            c = color(s.method),
            m = s.method
        );
    }
    out.push_str("</g>\n");
}

/// Renders the sweep as an SVG document.
pub fn render_svg(result: &SweepResult) -> Result<String> {
    if result.records.is_empty() {
        return Err(Error::Parameter("cannot plot an empty sweep".into()));
    }
    let cells = result.cells();
    let mut scenarios: Vec<Scenario> = Vec::new();
    for c in &cells {
        if !scenarios.contains(&c.scenario) {
            scenarios.push(c.scenario);
        }
    }
    let width = PANEL_W * scenarios.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    for (i, &scenario) in scenarios.iter().enumerate() {
        draw_panel(
            &mut out,
            scenario,
            &panel_series(&cells, scenario),
            PANEL_W * i as f64,
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_plot(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(result)?).map_err(|e| Error::io(path, e))
}
