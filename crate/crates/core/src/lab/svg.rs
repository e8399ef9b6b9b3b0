//! Minimal SVG charts: scatter and line series on linear or logarithmic axes.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub line: bool,
    pub color: &'static str,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

fn tx(v: f64, s: Scale) -> Option<f64> {
    match s {
        Scale::Linear => v.is_finite().then_some(v),
        Scale::Log => (v > 0.0 && v.is_finite()).then(|| v.log10()),
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step && out.len() < 12 {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64, s: Scale) -> String {
    match s {
        Scale::Linear => {
            if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
                format!("{v:.1e}")
            } else {
                format!("{}", (v * 1e6).round() / 1e6)
            }
        }
        Scale::Log => format!("1e{}", v.round() as i64),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|&(x, y)| Some((tx(x, self.x_scale)?, tx(y, self.y_scale)?)))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 0.5 * (1.0 + x0.abs());
            x1 += 0.5 * (1.0 + x1.abs());
        }
        if y1 - y0 <= 0.0 {
            y0 -= 0.5 * (1.0 + y0.abs());
            y1 += 0.5 * (1.0 + y1.abs());
        }
        let (dx, dy) = (0.05 * (x1 - x0), 0.05 * (y1 - y0));
        let (x0, x1, y0, y1) = (x0 - dx, x1 + dx, y0 - dy, y1 + dy);
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 1.5 * PAD);
        let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 1.5 * PAD);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{PAD}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, 0.5 * PAD, W - 1.5 * PAD, H - 1.5 * PAD);
        for t in ticks(x0, x1) {
            let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"#, px(t), H - PAD, H - PAD + 5.0, H - PAD + 18.0, fmt_tick(t, self.x_scale));
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(s, r#"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"#, PAD - 5.0, py(t), PAD, PAD - 8.0, py(t) + 4.0, fmt_tick(t, self.y_scale));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, PAD + (W - 1.5 * PAD) / 2.0, H - 15.0, escape(&self.x_label));
        let _ = writeln!(s, r#"<text x="15" y="{0}" text-anchor="middle" transform="rotate(-90 15 {0})">{1}</text>"#, H / 2.0, escape(&self.y_label));
        for (k, series) in self.series.iter().enumerate() {
            let mapped: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(tx(x, self.x_scale)?), py(tx(y, self.y_scale)?))))
                .collect();
            if series.line && mapped.len() > 1 {
                let path: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, series.color, path.join(" "));
            } else {
                for (x, y) in &mapped {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, series.color);
                }
            }
            let ly = 0.5 * PAD + 14.0 * (k as f64 + 1.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#, W - 1.0 * PAD - 120.0, series.color, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}
