//! Minimal line charts as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::MetricSeries;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions at a 1-2-5 step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Renders one chart with a polyline per series over `tau`. Series with
/// confidence bounds get whiskers; the `tau = 0` value of each series is
/// marked with a star.
pub fn render_svg(series: &[MetricSeries], title: &str, y_label: &str) -> Result<String> {
    let Some(first) = series.first() else {
        return Err(Error::InvalidArgument("no series to plot".into()));
    };
    if series.iter().any(|s| s.taus != first.taus) {
        return Err(Error::InvalidArgument(
            "series have different stress grids".into(),
        ));
    }
    let taus = &first.taus;
    let (x_lo, x_hi) = (
        taus.iter().copied().fold(f64::INFINITY, f64::min),
        taus.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in series {
        let bounds = s.lower_ci.iter().chain(s.upper_ci.iter()).flatten();
        for &v in s.values.iter().chain(bounds).filter(|v| v.is_finite()) {
            y_lo = y_lo.min(v);
            y_hi = y_hi.max(v);
        }
    }
    if !y_lo.is_finite() {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    let pad = if y_hi > y_lo {
        0.05 * (y_hi - y_lo)
    } else {
        0.5 * y_lo.abs().max(1.0)
    };
    y_lo -= pad;
    y_hi += pad;
    let (x_lo, x_hi) = if x_hi > x_lo {
        (x_lo, x_hi)
    } else {
        (x_lo - 1.0, x_hi + 1.0)
    };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // axes and grid
    let _ = writeln!(w, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        w,
        r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        w,
        r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(w, "</g>");
    for t in ticks(x_lo, x_hi) {
        let x = px(t);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            tick_label(t)
        );
    }
    for t in ticks(y_lo, y_hi) {
        let y = py(t);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">tau</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    if x_lo <= 0.0 && 0.0 <= x_hi {
        let x = px(0.0);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#999999" stroke-dasharray="4 3"/>"##,
            TOP + plot_h
        );
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        // NaN cells break the line
        let mut segment: Vec<String> = Vec::new();
        let mut segments = Vec::new();
        for (&t, &v) in s.taus.iter().zip(&s.values) {
            if v.is_finite() {
                segment.push(format!("{:.2},{:.2}", px(t), py(v)));
            } else if !segment.is_empty() {
                segments.push(std::mem::take(&mut segment));
            }
        }
        if !segment.is_empty() {
            segments.push(segment);
        }
        for seg in segments {
            let _ = writeln!(
                w,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                seg.join(" ")
            );
        }
        if let (Some(lo), Some(hi)) = (&s.lower_ci, &s.upper_ci) {
            for ((&t, &l), &h) in s.taus.iter().zip(lo).zip(hi) {
                if l.is_finite() && h.is_finite() {
                    let x = px(t);
                    let _ = writeln!(
                        w,
                        r#"<path d="M{:.2},{:.2}H{:.2}M{x:.2},{:.2}V{:.2}M{:.2},{:.2}H{:.2}" stroke="{color}" fill="none"/>"#,
                        x - 3.0,
                        py(l),
                        x + 3.0,
                        py(l),
                        py(h),
                        x - 3.0,
                        py(h),
                        x + 3.0
                    );
                }
            }
        }
        if let Some(i) = s.taus.iter().position(|&t| t == 0.0) {
            if s.values[i].is_finite() {
                let _ = writeln!(w, "{}", star(px(0.0), py(s.values[i]), 7.0));
            }
        }
        // legend
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&s.model_name)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Five-pointed red star centred on `(x, y)`.
fn star(x: f64, y: f64, r: f64) -> String {
    let pts: Vec<String> = (0..10)
        .map(|i| {
            let radius = if i % 2 == 0 { r } else { r * 0.45 };
            let a = std::f64::consts::PI * (i as f64 / 5.0 - 0.5);
            format!("{:.2},{:.2}", x + radius * a.cos(), y + radius * a.sin())
        })
        .collect();
    format!(
        r#"<polygon points="{}" fill="red" stroke="darkred"/>"#,
        pts.join(" ")
    )
}

pub fn emit_svg(series: &[MetricSeries], title: &str, y_label: &str, path: &Path) -> Result<()> {
    let svg = render_svg(series, title, y_label)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
