//! Minimal self-contained SVG line plots with optional log axes.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    fn tx(&self, v: f64) -> Option<f64> {
        let v = if self.log_x { (v > 0.0).then(|| v.log10())? } else { v };
        v.is_finite().then_some(v)
    }

    fn ty(&self, v: f64) -> Option<f64> {
        let v = if self.log_y { (v > 0.0).then(|| v.log10())? } else { v };
        v.is_finite().then_some(v)
    }

    pub fn render(&self) -> String {
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| s.points.iter().filter_map(|&(x, y)| Some((self.tx(x)?, self.ty(y)?))).collect())
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - ML - MR,
            H - MT - MB
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let xl = if self.log_x { format!("1e{xv:.1}") } else { format!("{xv:.3}") };
            let yl = if self.log_y { format!("1e{yv:.1}") } else { format!("{yv:.3}") };
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{xl}</text>"#, sx(xv), H - MB + 16.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{yl}</text>"#, ML - 6.0, sy(yv) + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        for (i, (series, p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[i % COLORS.len()];
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                ML + 8.0,
                MT + 16.0 + 14.0 * i as f64,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
