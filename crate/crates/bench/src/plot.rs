//! Self-contained SVG rendering of success curves.

use std::fmt::Write as _;
use std::path::Path;

use stg_core::metrics::CurvePoint;

use crate::error::{BenchError, Result};
use crate::output::fmt_num;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const DASHES: [&str; 6] = ["none", "8 4", "2 3", "10 3 2 3", "4 4", "12 4 2 4 2 4"];

/// Plot labels.
#[derive(Debug, Clone)]
pub struct PlotLabels {
    pub title: String,
    pub x_label: String,
}

impl Default for PlotLabels {
    fn default() -> Self {
        Self { title: "Probability of exact support recovery".into(), x_label: "N".into() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Methods in order of first appearance, each with its points sorted by x.
fn series(curves: &[CurvePoint]) -> Vec<(&str, Vec<&CurvePoint>)> {
    let mut out: Vec<(&str, Vec<&CurvePoint>)> = Vec::new();
    for c in curves {
        match out.iter_mut().find(|(m, _)| *m == c.method) {
            Some((_, pts)) => pts.push(c),
            None => out.push((&c.method, vec![c])),
        }
    }
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    out
}

/// SVG document: one dashed polyline per method over a shaded band polygon.
pub fn render_svg(curves: &[CurvePoint], labels: &PlotLabels) -> Result<String> {
    if curves.is_empty() {
        return Err(BenchError::Core(stg_core::Error::InvalidArgument("no curves to plot".into())));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        x_min = x_min.min(c.x);
        x_max = x_max.max(c.x);
    }
    if x_max == x_min {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;
    let pt = |x: f64, y: f64| format!("{},{}", fmt_num(px(x)), fmt_num(py(y)));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="16" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, escape(&labels.title));

    // axes, ticks and grid
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/>"#, TOP + plot_h, LEFT + plot_w, TOP + plot_h);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/>"#, TOP + plot_h);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##, LEFT + plot_w);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, fmt_num(v));
    }
    let mut xs: Vec<f64> = curves.iter().map(|c| c.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for &x in &xs {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt_num(px(x)),
            TOP + plot_h + 18.0,
            fmt_num(x)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(&labels.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">success rate</text>"#,
        TOP + plot_h / 2.0
    );

    for (i, (method, pts)) in series(curves).iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = DASHES[i % DASHES.len()];
        let band: Vec<String> = pts
            .iter()
            .map(|c| pt(c.x, c.ci_high))
            .chain(pts.iter().rev().map(|c| pt(c.x, c.ci_low)))
            .collect();
        let line: Vec<String> = pts.iter().map(|c| pt(c.x, c.success_rate)).collect();
        let name = escape(method);
        let _ = writeln!(s, r#"<g class="series" data-method="{name}">"#);
        let _ = writeln!(s, r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#, band.join(" "));
        let _ = writeln!(
            s,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            line.join(" ")
        );
        let ly = TOP + 12.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line class="legend" x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            lx + 30.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, lx + 36.0, ly + 4.0);
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(path: &Path, curves: &[CurvePoint], labels: &PlotLabels) -> Result<()> {
    let svg = render_svg(curves, labels)?;
    std::fs::write(path, svg).map_err(|e| BenchError::io(path, e))
}
