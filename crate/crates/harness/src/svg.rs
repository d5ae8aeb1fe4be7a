//! Minimal static SVG line plots arranged in a grid of panels.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
    /// Draw markers instead of a line.
    pub markers: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self { label: label.into(), points, color: color.to_string(), dashed: false, markers: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn markers(mut self) -> Self {
        self.markers = true;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Same scale on both axes (for hand paths).
    pub equal_aspect: bool,
    /// Shown instead of data when the panel has none.
    pub note: Option<String>,
}

const W: f64 = 300.0;
const H: f64 = 230.0;
const ML: f64 = 48.0;
const MR: f64 = 10.0;
const MT: f64 = 24.0;
const MB: f64 = 36.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(panel: &Panel) -> Option<(f64, f64, f64, f64)> {
    let pts = panel.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    let pad = |lo: f64, hi: f64| {
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    if panel.equal_aspect {
        let (pw, ph) = (W - ML - MR, H - MT - MB);
        let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        return Some((cx - scale * pw / 2.0, cx + scale * pw / 2.0, cy - scale * ph / 2.0, cy + scale * ph / 2.0));
    }
    Some((x0, x1, y0, y1))
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let _ = writeln!(out, r#"<g transform="translate({ox:.1},{oy:.1})">"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="15" text-anchor="middle" font-size="11">{}</text>"#, W / 2.0, esc(&panel.title));
    let _ = writeln!(out, r##"<rect x="{ML}" y="{MT}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>"#,
        ML + pw / 2.0,
        H - 6.0,
        esc(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.1}" text-anchor="middle" font-size="9" transform="rotate(-90 12 {:.1})">{}</text>"#,
        MT + ph / 2.0,
        MT + ph / 2.0,
        esc(&panel.y_label)
    );
    let Some((x0, x1, y0, y1)) = bounds(panel) else {
        let note = panel.note.clone().unwrap_or_else(|| "no data".into());
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10" fill="#888">{}</text>"##,
            ML + pw / 2.0,
            MT + ph / 2.0,
            esc(&note)
        );
        let _ = writeln!(out, "</g>");
        return;
    };
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MT + ph - (y - y0) / (y1 - y0) * ph;
    for (v, anchor, x, y) in [
        (x0, "start", ML, MT + ph + 11.0),
        (x1, "end", ML + pw, MT + ph + 11.0),
    ] {
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="8">{v:.3}</text>"#);
    }
    for (v, y) in [(y0, MT + ph), (y1, MT + 8.0)] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end" font-size="8">{v:.3}</text>"#, ML - 3.0);
    }
    for (i, s) in panel.series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        if s.markers {
            for (x, y) in &pts {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, sx(*x), sy(*y), s.color);
            }
        } else if pts.len() >= 2 {
            let d: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            let dash = if s.dashed { r#" stroke-dasharray="4,3""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"{dash}/>"#,
                d.join(" "),
                s.color
            );
        }
        if !s.label.is_empty() {
            let ly = MT + 10.0 + 10.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{ly:.1}" text-anchor="end" font-size="8" fill="{}">{}</text>"#,
                ML + pw - 4.0,
                s.color,
                esc(&s.label)
            );
        }
    }
    let _ = writeln!(out, "</g>");
}

/// Render panels row-major into a grid with `cols` columns.
pub fn render(title: &str, panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let (width, height) = (W * cols as f64, H * rows as f64 + 24.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="16" text-anchor="middle" font-size="13">{}</text>"#, width / 2.0, esc(title));
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, W * (i % cols) as f64, 24.0 + H * (i / cols) as f64);
    }
    out.push_str("</svg>\n");
    out
}
