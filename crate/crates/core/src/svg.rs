//! Minimal SVG canvas for planar figures.

use std::fmt::Write;

/// Maps a world rectangle onto a pixel canvas with `y` pointing up.
#[derive(Clone, Debug)]
pub struct Canvas {
    width: f64,
    height: f64,
    min: [f64; 2],
    scale: f64,
    body: String,
}

impl Canvas {
    pub fn new(min: [f64; 2], max: [f64; 2], width_px: f64) -> Self {
        let span_x = (max[0] - min[0]).max(1e-12);
        let span_y = (max[1] - min[1]).max(1e-12);
        let scale = width_px / span_x;
        Self {
            width: width_px,
            height: span_y * scale,
            min,
            scale,
            body: String::new(),
        }
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.min[0]) * self.scale,
            self.height - (y - self.min[1]) * self.scale,
        )
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Raw path data in pixel coordinates.
    pub fn path(&mut self, d: &str, stroke: &str, stroke_width: f64) {
        let _ = writeln!(
            self.body,
            r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{stroke_width}"/>"#
        );
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], stroke: &str, stroke_width: f64) {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.to_px(p[0], p[1]);
            let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { "L" });
        }
        self.path(&d, stroke, stroke_width);
    }

    pub fn circle(&mut self, center: [f64; 2], radius: f64, fill: &str, stroke: &str) {
        let (x, y) = self.to_px(center[0], center[1]);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="{fill}" stroke="{stroke}"/>"#,
            radius * self.scale
        );
    }

    pub fn text(&mut self, at: [f64; 2], size: f64, content: &str) {
        let (x, y) = self.to_px(at[0], at[1]);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" font-family="monospace">{}</text>"#,
            escape(content)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// White-to-red ramp for `t` in `[0, 1]`.
pub fn heat_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 1.0 };
    let g = (255.0 * (1.0 - t)).round() as u8;
    format!("#ff{g:02x}{g:02x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y_axis_points_up() {
        let c = Canvas::new([0.0, 0.0], [1.0, 2.0], 100.0);
        assert_eq!(c.to_px(0.0, 0.0), (0.0, 200.0));
        assert_eq!(c.to_px(1.0, 2.0), (100.0, 0.0));
    }

    #[test]
    fn document_is_closed() {
        let mut c = Canvas::new([0.0, 0.0], [1.0, 1.0], 50.0);
        c.circle([0.5, 0.5], 0.1, &heat_color(0.5), "black");
        c.text([0.1, 0.1], 8.0, "a<b");
        let s = c.finish();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
    }
}
