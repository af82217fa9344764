//! Static SVG of a plan's cost and minimum signed distance per iteration.

use std::fmt::Write as _;
use std::path::Path;

use crate::plan::PlanReport;
use crate::{DemoError, Result};

const W: f64 = 640.0;
const H: f64 = 220.0;
const PAD: f64 = 40.0;

fn panel(svg: &mut String, top: f64, title: &str, ys: &[f64], hline: Option<f64>) {
    let _ = writeln!(svg, r#"<g transform="translate(0,{top})">"#);
    let _ = writeln!(svg, r#"<text x="{PAD}" y="20" font-size="13">{title}</text>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let finite: Vec<f64> = ys.iter().copied().chain(hline).filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        svg.push_str("</g>\n");
        return;
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let n = ys.len().max(2) - 1;
    let sx = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / n as f64;
    let sy = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let pts: Vec<String> = ys.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", sx(i), sy(v))).collect();
    let _ = writeln!(svg, r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##, pts.join(" "));
    if let Some(c) = hline {
        let y = sy(c);
        let _ = writeln!(
            svg,
            r##"<line x1="{PAD}" x2="{}" y1="{y:.2}" y2="{y:.2}" stroke="#d62728" stroke-dasharray="4 3"/>"##,
            W - PAD
        );
    }
    let _ = writeln!(svg, r#"<text x="4" y="{:.2}" font-size="10">{hi:.3}</text>"#, PAD + 4.0);
    let _ = writeln!(svg, r#"<text x="4" y="{:.2}" font-size="10">{lo:.3}</text>"#, H - PAD);
    svg.push_str("</g>\n");
}

pub fn plan_svg(report: &PlanReport, clearance: f64) -> String {
    let costs: Vec<f64> = report.iterations.iter().map(|r| r.cost).collect();
    let sdfs: Vec<f64> = report.iterations.iter().map(|r| r.min_sdf.unwrap_or(f64::NAN)).collect();
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{}" font-family="sans-serif">"#,
        2.0 * H
    );
    svg.push('\n');
    panel(&mut svg, 0.0, "total cost", &costs, None);
    panel(&mut svg, H, "min sdf (dashed: clearance)", &sdfs, Some(clearance));
    svg.push_str("</svg>\n");
    svg
}

pub fn write_plan_svg(report: &PlanReport, clearance: f64, path: &Path) -> Result<()> {
    std::fs::write(path, plan_svg(report, clearance)).map_err(|source| DemoError::Write { path: path.to_owned(), source })
}
