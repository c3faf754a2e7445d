//! Minimal deterministic SVG emission: polyline plots with optional log axes
//! and a cell heatmap for planar fields. No timestamps, fixed palette, so the
//! same data always produces byte-identical files.

use crate::planar::{MaskedGrid, PlanarField};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Dashed lines mark reference curves (barriers, analytic lines).
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, dashed: false }
    }

    pub fn reference(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, dashed: true }
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 760.0;
const H: f64 = 500.0;
const ML: f64 = 80.0;
const MR: f64 = 30.0;
const MT: f64 = 50.0;
const MB: f64 = 60.0;

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn loglog(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn tx(&self, x: f64) -> f64 {
        if self.log_x {
            x.log10()
        } else {
            x
        }
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    fn usable(&self, p: (f64, f64)) -> bool {
        let ok_x = !self.log_x || p.0 > 0.0;
        let ok_y = !self.log_y || p.1 > 0.0;
        ok_x && ok_y && p.0.is_finite() && p.1.is_finite()
    }

    pub fn svg(&self) -> String {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &p in s.points.iter().filter(|&&p| self.usable(p)) {
                let (x, y) = (self.tx(p.0), self.ty(p.1));
                lo.0 = lo.0.min(x);
                lo.1 = lo.1.min(y);
                hi.0 = hi.0.max(x);
                hi.1 = hi.1.max(y);
            }
        }
        if !lo.0.is_finite() {
            lo = (0.0, 0.0);
            hi = (1.0, 1.0);
        }
        if hi.0 - lo.0 < 1e-300 {
            hi.0 = lo.0 + 1.0;
        }
        if hi.1 - lo.1 < 1e-300 {
            hi.1 = lo.1 + 1.0;
        }
        let px = |x: f64| ML + (x - lo.0) / (hi.0 - lo.0) * (W - ML - MR);
        let py = |y: f64| H - MB - (y - lo.1) / (hi.1 - lo.1) * (H - MT - MB);

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">\n"
        ));
        svg.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            W / 2.0,
            xml_escape(&self.title)
        ));
        // frame
        svg.push_str(&format!(
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            W - ML - MR,
            H - MT - MB
        ));
        // ticks: 5 per axis on the transformed scale
        for k in 0..=4 {
            let fx = lo.0 + (hi.0 - lo.0) * k as f64 / 4.0;
            let fy = lo.1 + (hi.1 - lo.1) * k as f64 / 4.0;
            let (lx, ly) = (
                if self.log_x { 10f64.powf(fx) } else { fx },
                if self.log_y { 10f64.powf(fy) } else { fy },
            );
            svg.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
                px(fx),
                H - MB,
                H - MB + 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                px(fx),
                H - MB + 20.0,
                tick_label(lx)
            ));
            svg.push_str(&format!(
                "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n",
                py(fy),
                ML - 5.0,
                ML
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
                ML - 8.0,
                py(fy) + 4.0,
                tick_label(ly)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            W / 2.0,
            H - 15.0,
            xml_escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            H / 2.0,
            H / 2.0,
            xml_escape(&self.y_label)
        ));
        // series
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            let mut points = String::new();
            for &p in s.points.iter().filter(|&&p| self.usable(p)) {
                points.push_str(&format!("{:.3},{:.3} ", px(self.tx(p.0)), py(self.ty(p.1))));
            }
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\"{dash} points=\"{}\"/>\n",
                points.trim_end()
            ));
            let ly = MT + 16.0 * (i as f64 + 1.0);
            svg.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{ly}\" x2=\"{1}\" y2=\"{ly}\" stroke=\"{color}\"{dash}/>\n",
                W - MR - 150.0,
                W - MR - 120.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\">{}</text>\n",
                W - MR - 114.0,
                ly + 4.0,
                xml_escape(&s.label)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Cell heatmap of a planar field (blue -> yellow -> red over the value range).
pub fn heatmap_svg(grid: &MaskedGrid, field: &PlanarField, title: &str) -> String {
    let (lo, hi) = (field.min(), field.max());
    let span = (hi - lo).max(1e-300);
    let scale = 700.0 / grid.nx.max(grid.ny) as f64;
    let w = grid.nx as f64 * scale;
    let h = grid.ny as f64 * scale + 40.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!("<rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"white\"/>\n"));
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"20\" text-anchor=\"middle\">{} (min {:.3e}, max {:.3e})</text>\n",
        w / 2.0,
        xml_escape(title),
        lo,
        hi
    ));
    for (k, &u) in field.values.iter().enumerate() {
        let (i, j) = grid.cells[k];
        let s = ((u - lo) / span).clamp(0.0, 1.0);
        let (r, g, b) = if s < 0.5 {
            let t = 2.0 * s;
            (
                (30.0 + 225.0 * t) as u8,
                (60.0 + 195.0 * t) as u8,
                (180.0 * (1.0 - t) + 40.0 * t) as u8,
            )
        } else {
            let t = 2.0 * (s - 0.5);
            (255, (255.0 * (1.0 - t) + 40.0 * t) as u8, 40u8.saturating_sub((40.0 * t) as u8))
        };
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({r},{g},{b})\"/>\n",
            i as f64 * scale,
            40.0 + (grid.ny - 1 - j as usize) as f64 * scale,
            scale + 0.1,
            scale + 0.1
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
