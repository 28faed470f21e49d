//! Minimal SVG line plots, optionally drawn over the occupancy grid.
//!
//! Output is a pure function of the input: coordinates are written with a
//! fixed number of decimals and nothing depends on time or hashing order,
//! so equal inputs give byte-identical documents.

use std::fmt::Write;

use crate::field::{Cell, OccupancyGrid};
use crate::Vec2;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points }
    }

    pub fn from_path(label: impl Into<String>, points: &[Vec2]) -> Self {
        Self::new(label, points.iter().map(|p| (p.x, p.y)).collect())
    }
}

/// Workspace drawn under the series: obstacle cells plus start and target.
#[derive(Debug, Clone, Copy)]
pub struct Overlay<'a> {
    pub grid: &'a OccupancyGrid,
    pub start: Option<Vec2>,
    pub target: Option<Vec2>,
}

#[derive(Debug, Clone)]
pub struct Plot<'a> {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub overlay: Option<Overlay<'a>>,
}

impl<'a> Plot<'a> {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            overlay: None,
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn with_overlay(mut self, overlay: Overlay<'a>) -> Self {
        self.overlay = Some(overlay);
        self
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    scale_x: f64,
    scale_y: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * self.scale_x
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) * self.scale_y
    }
}

fn bounds(plot: &Plot) -> (f64, f64, f64, f64) {
    if let Some(ov) = &plot.overlay {
        let h = ov.grid.cell_size();
        return (0.0, ov.grid.nx() as f64 * h, 0.0, ov.grid.ny() as f64 * h);
    }
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in plot.series.iter().flat_map(|s| &s.points) {
        if x.is_finite() && y.is_finite() {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| if hi - lo > 0.0 { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    (x0, x1, y0, y1)
}

/// Round tick spacing giving about five intervals over `span`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac < 1.5 {
        1.0
    } else if frac < 3.5 {
        2.0
    } else if frac < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the plot as a standalone SVG document.
///
/// With an overlay the axes span the grid with equal aspect and every
/// OBSTACLE cell becomes one `<rect class="obstacle">`.
pub fn render_plot(plot: &Plot) -> String {
    let (x0, x1, y0, y1) = bounds(plot);
    let aw = WIDTH - 2.0 * MARGIN;
    let ah = HEIGHT - 2.0 * MARGIN;
    let (mut sx, mut sy) = (aw / (x1 - x0), ah / (y1 - y0));
    if plot.overlay.is_some() {
        let s = sx.min(sy);
        sx = s;
        sy = s;
    }
    let fr = Frame { x0, x1, y0, y1, scale_x: sx, scale_y: sy };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );

    if let Some(ov) = &plot.overlay {
        let g = ov.grid;
        let h = g.cell_size();
        let side = h * fr.scale_x;
        let _ = writeln!(out, r##"<g fill="#555555">"##);
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.label(i, j) == Cell::Obstacle {
                    let _ = writeln!(
                        out,
                        r#"<rect class="obstacle" x="{:.3}" y="{:.3}" width="{side:.3}" height="{side:.3}"/>"#,
                        fr.px(i as f64 * h),
                        fr.py((j + 1) as f64 * h)
                    );
                }
            }
        }
        let _ = writeln!(out, "</g>");
        for (p, color, label) in [(ov.start, "#2ca02c", "start"), (ov.target, "#d62728", "target")] {
            if let Some(p) = p {
                let _ = writeln!(
                    out,
                    r#"<circle class="{label}" cx="{:.3}" cy="{:.3}" r="5" fill="{color}"/>"#,
                    fr.px(p.x),
                    fr.py(p.y)
                );
            }
        }
    }

    // axes and ticks
    let (left, right) = (fr.px(fr.x0), fr.px(fr.x1));
    let (bottom, top) = (fr.py(fr.y0), fr.py(fr.y1));
    let _ = writeln!(
        out,
        r#"<rect x="{left:.3}" y="{top:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    let dx = tick_step(fr.x1 - fr.x0);
    let mut t = (fr.x0 / dx).ceil() * dx;
    while t <= fr.x1 + 1e-9 * dx {
        let x = fr.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.3}" y1="{bottom:.3}" x2="{x:.3}" y2="{:.3}" stroke="black"/><text x="{x:.3}" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            fmt_tick(t, dx)
        );
        t += dx;
    }
    let dy = tick_step(fr.y1 - fr.y0);
    let mut t = (fr.y0 / dy).ceil() * dy;
    while t <= fr.y1 + 1e-9 * dy {
        let y = fr.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.3}" y1="{y:.3}" x2="{left:.3}" y2="{y:.3}" stroke="black"/><text x="{:.3}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            fmt_tick(t, dy)
        );
        t += dy;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&plot.y_label)
    );

    for (k, s) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        let finite: Vec<(f64, f64)> =
            s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).map(|&(x, y)| (fr.px(x), fr.py(y))).collect();
        // skip vertices closer than a quarter pixel to the last one drawn, keeping the endpoint
        let mut last: Option<(f64, f64)> = None;
        for (i, &(px, py)) in finite.iter().enumerate() {
            let near = last.is_some_and(|(lx, ly)| (px - lx).hypot(py - ly) < 0.25);
            if near && i + 1 < finite.len() {
                continue;
            }
            let _ = write!(pts, "{px:.3},{py:.3} ");
            last = Some((px, py));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
        let ly = top + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
            right - 130.0,
            right - 110.0,
            right - 104.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let v = if v.abs() < 1e-12 * step { 0.0 } else { v };
    format!("{v:.decimals$}")
}
