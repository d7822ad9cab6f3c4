//! Minimal SVG writer for scatter plots and heat maps.

use std::fmt::Write as _;

pub const DEFAULT_COLORS: &str = "#1f77b4,#d62728,#2ca02c,#ff7f0e,#9467bd,#8c564b";

#[derive(Clone, Debug, PartialEq)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub point_radius: f64,
    pub colors: Vec<String>,
}

impl Style {
    pub fn color(&self, label: usize) -> &str {
        &self.colors[label % self.colors.len()]
    }

    /// Margin wide enough for the largest mark.
    fn padding(&self) -> f64 {
        self.margin.max(1.5 * self.point_radius + 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mark {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub color: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub color: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvgScene {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub cells: Vec<Cell>,
    pub marks: Vec<Mark>,
    /// Axis annotations placed under and left of the plot area.
    pub x_label: String,
    pub y_label: String,
}

/// Maps data extents onto the plot area with equal scale on both axes.
struct Frame {
    min: [f64; 2],
    scale: f64,
    offset: [f64; 2],
    height: f64,
}

impl Frame {
    fn new(lo: [f64; 2], hi: [f64; 2], style: &Style) -> Self {
        let pad = style.padding();
        let avail = [style.width - 2.0 * pad, style.height - 2.0 * pad];
        let span = [hi[0] - lo[0], hi[1] - lo[1]];
        let scale = (0..2)
            .filter(|&a| span[a] > 0.0)
            .map(|a| avail[a] / span[a])
            .fold(f64::INFINITY, f64::min);
        let scale = if scale.is_finite() { scale } else { 1.0 };
        let offset = [
            pad + (avail[0] - span[0] * scale) / 2.0,
            pad + (avail[1] - span[1] * scale) / 2.0,
        ];
        Self {
            min: lo,
            scale,
            offset,
            height: style.height,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = self.offset[0] + (x - self.min[0]) * self.scale;
        let py = self.height - (self.offset[1] + (y - self.min[1]) * self.scale);
        (px, py)
    }
}

fn extents(points: impl Iterator<Item = (f64, f64)>) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (x, y) in points {
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    }
    if lo[0] > hi[0] {
        return ([0.0; 2], [0.0; 2]);
    }
    (lo, hi)
}

fn coord(p: &[f64], axis: usize) -> f64 {
    p.get(axis).copied().unwrap_or(0.0)
}

fn range_label(axis: &str, lo: f64, hi: f64) -> String {
    format!("{axis} in [{lo:.3}, {hi:.3}]")
}

/// Scatter plot of the first two coordinates. A third coordinate, when
/// present, scales the point radius between half and one and a half times
/// the base radius.
pub fn scatter(points: &[Vec<f64>], labels: &[usize], title: &str, style: &Style) -> SvgScene {
    let (lo, hi) = extents(points.iter().map(|p| (coord(p, 0), coord(p, 1))));
    let frame = Frame::new(lo, hi, style);
    let depth = points.iter().any(|p| p.len() >= 3);
    let (zlo, zhi) = points
        .iter()
        .map(|p| coord(p, 2))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| {
            (a.min(z), b.max(z))
        });
    let marks = points
        .iter()
        .zip(labels)
        .map(|(p, &label)| {
            let (x, y) = frame.map(coord(p, 0), coord(p, 1));
            let r = if depth && zhi > zlo {
                style.point_radius * (0.5 + (coord(p, 2) - zlo) / (zhi - zlo))
            } else {
                style.point_radius
            };
            Mark {
                x,
                y,
                r,
                color: style.color(label).to_string(),
            }
        })
        .collect();
    let mut y_label = range_label("y", lo[1], hi[1]);
    if depth {
        y_label.push_str(&format!("; radius ~ z in [{zlo:.3}, {zhi:.3}]"));
    }
    SvgScene {
        width: style.width,
        height: style.height,
        title: title.to_string(),
        cells: Vec::new(),
        marks,
        x_label: range_label("x", lo[0], hi[0]),
        y_label,
    }
}

/// Blue (low) to red (high) ramp through white.
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let s = t * 2.0;
        (59.0 + s * 196.0, 76.0 + s * 179.0, 192.0 + s * 63.0)
    } else {
        let s = (t - 0.5) * 2.0;
        (255.0 - s * 75.0, 255.0 - s * 251.0, 255.0 - s * 217.0)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        r.round() as u8,
        g.round() as u8,
        b.round() as u8
    )
}

/// Heat map of `values[i][j]` over the square `[lo, hi]²` (row `i` runs
/// along y, column `j` along x) with sample points drawn on top.
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    values: &[Vec<f64>],
    lo: f64,
    hi: f64,
    vmax: f64,
    samples: &[Vec<f64>],
    labels: &[usize],
    title: &str,
    style: &Style,
) -> SvgScene {
    let frame = Frame::new([lo; 2], [hi; 2], style);
    let n = values.len();
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        hi - lo
    };
    let mut cells = Vec::with_capacity(n * n);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            // Grid nodes sit at cell centres; edge cells are clipped to the extent.
            let x0 = (lo + (j as f64 - 0.5) * step).max(lo);
            let x1 = (lo + (j as f64 + 0.5) * step).min(hi);
            let y0 = (lo + (i as f64 - 0.5) * step).max(lo);
            let y1 = (lo + (i as f64 + 0.5) * step).min(hi);
            let (px, py) = frame.map(x0, y1);
            cells.push(Cell {
                x: px,
                y: py,
                w: (x1 - x0) * frame.scale,
                h: (y1 - y0) * frame.scale,
                color: ramp(if vmax > 0.0 { v / vmax } else { 0.0 }),
            });
        }
    }
    let mut scene = scatter(samples, labels, title, style);
    // Re-place the samples in the grid's frame rather than their own extents.
    for (m, p) in scene.marks.iter_mut().zip(samples) {
        let (x, y) = frame.map(coord(p, 0).clamp(lo, hi), coord(p, 1).clamp(lo, hi));
        m.x = x;
        m.y = y;
    }
    scene.cells = cells;
    scene.x_label = range_label("x", lo, hi);
    scene.y_label = format!(
        "{}; value 0 (blue) to {vmax} (red)",
        range_label("y", lo, hi)
    );
    scene
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

impl SvgScene {
    pub fn render(&self) -> String {
        let (w, h) = (self.width, self.height);
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
        );
        if !self.cells.is_empty() {
            let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
            for c in &self.cells {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                    c.x, c.y, c.w, c.h, c.color
                );
            }
            let _ = writeln!(s, "</g>");
        }
        let _ = writeln!(s, r#"<g fill-opacity="0.8">"#);
        for m in &self.marks {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{}"/>"#,
                m.x, m.y, m.r, m.color
            );
        }
        let _ = writeln!(s, "</g>");
        let font = r#"font-family="sans-serif" font-size="11""#;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="14" text-anchor="middle" {font} font-weight="bold">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {font}>{}</text>"#,
            w / 2.0,
            h - 4.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="10" y="{:.1}" text-anchor="middle" transform="rotate(-90 10 {:.1})" {font}>{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        s.push_str("</svg>\n");
        s
    }
}
