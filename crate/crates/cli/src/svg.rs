//! Minimal SVG writer: framed panels with ticks, polylines, filled polygons
//! and cell maps. Output depends only on the data, so it is byte-stable.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
pub const DASHES: [Option<&str>; 4] = [None, Some("6 3"), Some("2 2"), Some("6 2 2 2")];

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 50.0;

#[derive(Debug, Clone, Copy)]
pub enum ColorMap {
    /// Blue below zero, red above, white at zero; symmetric about zero.
    Diverging { limit: f64 },
    /// Dark to bright over `[min, max]`.
    Sequential { min: f64, max: f64 },
}

impl ColorMap {
    fn color(&self, v: f64) -> String {
        match *self {
            ColorMap::Diverging { limit } => {
                let t = if limit > 0.0 { (v / limit).clamp(-1.0, 1.0) } else { 0.0 };
                let (r, g, b) = if t >= 0.0 {
                    (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
                } else {
                    (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
                };
                rgb(r, g, b)
            }
            ColorMap::Sequential { min, max } => {
                let t = if max > min { ((v - min) / (max - min)).clamp(0.0, 1.0) } else { 0.0 };
                // Piecewise-linear dark purple -> teal -> yellow.
                let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
                let (a, b, u) = if t < 0.5 { (stops[0], stops[1], 2.0 * t) } else { (stops[1], stops[2], 2.0 * t - 1.0) };
                rgb(a.0 + (b.0 - a.0) * u, a.1 + (b.1 - a.1) * u, a.2 + (b.2 - a.2) * u)
            }
        }
    }
}

fn rgb(r: f64, g: f64, b: f64) -> String {
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

#[derive(Debug, Clone)]
pub enum Item {
    Line {
        points: Vec<(f64, f64)>,
        color: String,
        dash: Option<String>,
        label: Option<String>,
    },
    Polygon {
        points: Vec<(f64, f64)>,
        fill: String,
        opacity: f64,
        stroke_dash: Option<String>,
    },
    /// Cell map over a regular grid; `values[i * ny + j]` at column `i`, row `j`.
    Cells {
        x_range: (f64, f64),
        y_range: (f64, f64),
        nx: usize,
        ny: usize,
        values: Vec<f64>,
        map: ColorMap,
    },
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub items: Vec<Item>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            items: Vec::new(),
        }
    }

    pub fn line(&mut self, points: Vec<(f64, f64)>, series: usize, label: Option<String>) {
        self.items.push(Item::Line {
            points,
            color: PALETTE[series % PALETTE.len()].to_string(),
            dash: DASHES[series % DASHES.len()].map(str::to_string),
            label,
        });
    }

    /// Sets both ranges to the extent of the line and polygon data, padded by
    /// 5% in y.
    pub fn fit(&mut self) {
        let pts = self.items.iter().flat_map(|it| match it {
            Item::Line { points, .. } => points.as_slice(),
            _ => &[],
        });
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return;
        }
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
            y0 -= pad;
            y1 += pad;
        }
        let pad = 0.05 * (y1 - y0);
        self.x_range = (x0, x1);
        self.y_range = (y0 - pad, y1 + pad);
    }
}

/// Renders panels on a grid with `cols` columns.
pub fn render(title: &str, panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * rows as f64 + 24.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    // Long titles get a smaller font rather than being clipped.
    let size = (14.0f64).min((w - 20.0) / (0.62 * title.chars().count().max(1) as f64)).floor();
    let _ = writeln!(s, r#"<text x="{}" y="17" text-anchor="middle" font-size="{size}">{}</text>"#, w / 2.0, esc(title));
    for (k, p) in panels.iter().enumerate() {
        let ox = PANEL_W * (k % cols) as f64;
        let oy = 24.0 + PANEL_H * (k / cols) as f64;
        render_panel(&mut s, p, ox, oy, k);
    }
    s.push_str("</svg>\n");
    s
}

fn render_panel(s: &mut String, p: &Panel, ox: f64, oy: f64, id: usize) {
    let (pw, ph) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
    let (xa, xb) = p.x_range;
    let (ya, yb) = p.y_range;
    let sx = move |x: f64| x0 + (x - xa) / (xb - xa) * pw;
    let sy = move |y: f64| y0 + ph - (y - ya) / (yb - ya) * ph;

    let _ = writeln!(s, r#"<clipPath id="clip{id}"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath>"#, f(x0), f(y0), f(pw), f(ph));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, f(x0 + pw / 2.0), f(oy + 20.0), esc(&p.title));
    let _ = writeln!(s, r#"<g clip-path="url(#clip{id})">"#);
    let mut legend = Vec::new();
    for it in &p.items {
        match it {
            Item::Cells {
                x_range,
                y_range,
                nx,
                ny,
                values,
                map,
            } => {
                let dx = (x_range.1 - x_range.0) / *nx as f64;
                let dy = (y_range.1 - y_range.0) / *ny as f64;
                for i in 0..*nx {
                    for j in 0..*ny {
                        let v = values[i * ny + j];
                        if !v.is_finite() {
                            continue;
                        }
                        let (ax, bx) = (sx(x_range.0 + dx * i as f64), sx(x_range.0 + dx * (i + 1) as f64));
                        let (ay, by) = (sy(y_range.0 + dy * (j + 1) as f64), sy(y_range.0 + dy * j as f64));
                        // Slight overlap hides seams between cells.
                        let _ = writeln!(
                            s,
                            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                            f(ax),
                            f(ay),
                            f(bx - ax + 0.3),
                            f(by - ay + 0.3),
                            map.color(v)
                        );
                    }
                }
            }
            Item::Polygon {
                points,
                fill,
                opacity,
                stroke_dash,
            } => {
                let _ = write!(s, r#"<polygon fill="{fill}" fill-opacity="{opacity}" points=""#);
                for &(x, y) in points {
                    let _ = write!(s, "{},{} ", f(sx(x)), f(sy(y)));
                }
                s.push('"');
                if let Some(d) = stroke_dash {
                    let _ = write!(s, r#" stroke="black" stroke-dasharray="{d}""#);
                }
                s.push_str("/>\n");
            }
            Item::Line {
                points,
                color,
                dash,
                label,
            } => {
                let _ = write!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5""#);
                if let Some(d) = dash {
                    let _ = write!(s, r#" stroke-dasharray="{d}""#);
                }
                s.push_str(r#" points=""#);
                for &(x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                    let _ = write!(s, "{},{} ", f(sx(x)), f(sy(y)));
                }
                s.push_str("\"/>\n");
                if let Some(l) = label {
                    legend.push((l.clone(), color.clone(), dash.clone()));
                }
            }
        }
    }
    s.push_str("</g>\n");
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, f(x0), f(y0), f(pw), f(ph));

    for t in ticks(xa, xb) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#, f(x), f(y0 + ph), f(y0 + ph + 5.0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, f(x), f(y0 + ph + 18.0), label(t));
    }
    for t in ticks(ya, yb) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>"#, f(x0 - 5.0), f(y), f(x0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, f(x0 - 8.0), f(y + 4.0), label(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, f(x0 + pw / 2.0), f(oy + PANEL_H - 10.0), esc(&p.x_label));
    let (lx, ly) = (ox + 14.0, y0 + ph / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
        f(lx),
        f(ly),
        f(lx),
        f(ly),
        esc(&p.y_label)
    );

    for (k, (l, color, dash)) in legend.iter().enumerate() {
        let y = y0 + 14.0 + 16.0 * k as f64;
        let _ = write!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1.5""#, f(x0 + 8.0), f(y - 4.0), f(x0 + 32.0), f(y - 4.0));
        if let Some(d) = dash {
            let _ = write!(s, r#" stroke-dasharray="{d}""#);
        }
        s.push_str("/>\n");
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, f(x0 + 38.0), f(y), esc(l));
    }
}

/// About five round tick positions covering `[a, b]`.
fn ticks(a: f64, b: f64) -> Vec<f64> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Vec::new();
    }
    let raw = (b - a) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (a / step).ceil() as i64;
    let last = (b / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Coordinates rounded to 0.01 px keep files small and stable.
fn f(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
