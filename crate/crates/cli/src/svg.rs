//! Minimal deterministic SVG line plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Clone, Debug)]
pub struct Marker {
    pub label: String,
    pub at: (f64, f64),
    pub filled: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    /// Fixed ranges; otherwise taken from the data.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    /// Same scale on both axes.
    pub square: bool,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn line(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points, dashed: false });
        self
    }

    pub fn dashed(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { label: label.into(), points, dashed: true });
        self
    }

    pub fn marker(mut self, label: &str, at: (f64, f64), filled: bool) -> Self {
        self.markers.push(Marker { label: label.into(), at, filled });
        self
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(self.markers.iter().map(|m| m.at))
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let widen = |lo: f64, hi: f64| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let mut xr = self.x_range.unwrap_or_else(|| widen(x0, x1));
        let mut yr = self.y_range.unwrap_or_else(|| widen(y0, y1));
        if self.square {
            let span = (xr.1 - xr.0).max(yr.1 - yr.0);
            xr.1 = xr.0 + span;
            yr.1 = yr.0 + span;
        }
        (xr, yr)
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        for (v, pos) in [(x0, sx(x0)), (x1, sx(x1))] {
            let _ = writeln!(out, r#"<text x="{pos:.2}" y="{}" text-anchor="middle">{}</text>"#, H - PAD + 16.0, tick(v));
        }
        for (v, pos) in [(y0, sy(y0)), (y1, sy(y1))] {
            let _ = writeln!(out, r#"<text x="{}" y="{pos:.2}" text-anchor="end">{}</text>"#, PAD - 4.0, tick(v));
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                W - PAD - 150.0,
                PAD + 16.0 * (k as f64 + 1.0),
                escape(&s.label)
            );
        }
        for m in &self.markers {
            let fill = if m.filled { "black" } else { "white" };
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" stroke="black"><title>{}</title></circle>"#,
                sx(m.at.0),
                sy(m.at.1),
                escape(&m.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    format!("{:.3}", v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic() {
        let p = Plot::new("t", "x", "y").line("a", vec![(0.0, 0.0), (1.0, 2.0)]).marker("p", (0.5, 1.0), true);
        assert_eq!(p.render(), p.render());
        assert!(p.render().contains("<polyline"));
    }

    #[test]
    fn labels_are_escaped() {
        let p = Plot::new("a<b", "x", "y");
        assert!(p.render().contains("a&lt;b"));
    }
}
