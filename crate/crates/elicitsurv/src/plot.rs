//! Minimal SVG line, step and band charts.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

#[derive(Debug, Clone)]
pub enum SeriesKind {
    Line,
    /// Right-continuous step function starting from `points[0]`.
    Step,
    Dashed,
    /// Shaded region between `points` (lower) and `upper`.
    Band { upper: Vec<(f64, f64)> },
    /// Vertical interval markers `(x, lo, hi)`.
    Intervals { bars: Vec<(f64, f64, f64)> },
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub kind: SeriesKind,
    /// Palette slot; series sharing a slot share a colour.
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    fn sx(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (W - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        let y = y.clamp(a, b);
        H - BOTTOM - (y - a) / (b - a) * (H - TOP - BOTTOM)
    }

    fn path(&self, pts: &[(f64, f64)], step: bool) -> String {
        let mut d = String::new();
        let mut prev: Option<f64> = None;
        for (i, &(x, y)) in pts.iter().enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            let (px, py) = (self.sx(x), self.sy(y));
            if i == 0 || prev.is_none() {
                let _ = write!(d, "M{px:.2},{py:.2}");
            } else if step {
                let _ = write!(d, "H{px:.2}V{py:.2}");
            } else {
                let _ = write!(d, "L{px:.2},{py:.2}");
            }
            prev = Some(py);
        }
        d
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, esc(&self.title));

        let (x0, x1) = (self.sx(self.x_range.0), self.sx(self.x_range.1));
        let (y0, y1) = (self.sy(self.y_range.0), self.sy(self.y_range.1));
        for t in ticks(self.x_range.0, self.x_range.1) {
            let x = self.sx(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#eee"/>"##);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 16.0, fmt_tick(t));
        }
        for t in ticks(self.y_range.0, self.y_range.1) {
            let y = self.sy(t);
            let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#eee"/>"##);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, fmt_tick(t));
        }
        let _ = writeln!(s, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (y0 + y1) / 2.0,
            esc(&self.y_label)
        );

        let mut legend = Vec::new();
        for series in &self.series {
            let color = PALETTE[series.color % PALETTE.len()];
            match &series.kind {
                SeriesKind::Band { upper } => {
                    let mut d = self.path(&series.points, false);
                    let back: Vec<(f64, f64)> = upper.iter().rev().copied().collect();
                    d.push_str(&self.path(&back, false).replacen('M', "L", 1));
                    d.push('Z');
                    let _ = writeln!(s, r#"<path d="{d}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#);
                }
                SeriesKind::Intervals { bars } => {
                    for &(x, lo, hi) in bars {
                        let px = self.sx(x);
                        let _ = writeln!(
                            s,
                            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                            self.sy(lo),
                            self.sy(hi)
                        );
                    }
                }
                kind => {
                    let dash = if matches!(kind, SeriesKind::Dashed) { r#" stroke-dasharray="6,4""# } else { "" };
                    let d = self.path(&series.points, matches!(kind, SeriesKind::Step));
                    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#);
                }
            }
            if !series.name.is_empty() {
                legend.push((series.name.as_str(), color));
            }
        }
        for (i, (name, color)) in legend.iter().enumerate() {
            let y = TOP + 14.0 + 18.0 * i as f64;
            let x = W - RIGHT + 12.0;
            let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/>"#, x + 18.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, esc(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn fmt_tick(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    if r == r.trunc() && r.abs() < 1e6 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}
