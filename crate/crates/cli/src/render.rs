//! Plain SVG renderings. No numeric contract: the CSV files are authoritative.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use mkt_core::boundary::BoundaryCurve;
use mkt_core::solver::FieldGrid;
use nalgebra::Vector2;

const SIZE: f64 = 640.0;

struct Frame {
    bbox: [f64; 4],
    scale: f64,
}

impl Frame {
    fn new(bbox: [f64; 4]) -> Self {
        let scale = SIZE / (bbox[1] - bbox[0]).max(bbox[3] - bbox[2]);
        Frame { bbox, scale }
    }

    fn map(&self, p: &Vector2<f64>) -> (f64, f64) {
        ((p.x - self.bbox[0]) * self.scale, (self.bbox[3] - p.y) * self.scale)
    }

    fn open(&self) -> String {
        let w = (self.bbox[1] - self.bbox[0]) * self.scale;
        let h = (self.bbox[3] - self.bbox[2]) * self.scale;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        )
    }

    fn boundary(&self, curve: &BoundaryCurve) -> String {
        let mut d = String::new();
        for k in 0..=720 {
            let (x, y) = self.map(&curve.point(TAU * k as f64 / 720.0));
            let _ = write!(d, "{}{x:.2},{y:.2} ", if k == 0 { "M" } else { "L" });
        }
        format!("<path d=\"{d}Z\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n")
    }
}

/// Piecewise-linear ramp from dark blue through teal to yellow.
fn color(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 4] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.35, [49.0, 104.0, 142.0]),
        (0.7, [53.0, 183.0, 121.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let i = STOPS.iter().rposition(|s| s.0 <= t).unwrap().min(STOPS.len() - 2);
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let u = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|k| (a.1[k] + u * (b.1[k] - a.1[k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub fn field(grid: &FieldGrid<f64>, curve: &BoundaryCurve, label: &str) -> String {
    let fr = Frame::new(grid.bbox);
    let (lo, hi) = grid
        .values
        .iter()
        .zip(&grid.inside)
        .filter(|(v, inside)| **inside && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (cw, ch) = (grid.dx() * fr.scale, grid.dy() * fr.scale);
    let mut s = fr.open();
    for (k, x) in grid.points() {
        if !grid.inside[k] {
            continue;
        }
        let (px, py) = fr.map(&x);
        let fill = if grid.singular[k] {
            "#d62728".to_string()
        } else {
            color((grid.values[k] - lo) / span)
        };
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
            px - cw / 2.0,
            py - ch / 2.0,
            cw + 0.05,
            ch + 0.05
        );
    }
    s.push_str(&fr.boundary(curve));
    let _ = writeln!(
        s,
        "<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"13\">{label}: [{lo:.4}, {hi:.4}]</text>"
    );
    s.push_str("</svg>\n");
    s
}

pub fn cut_locus(curve: &BoundaryCurve, cut_points: &[Vector2<f64>]) -> String {
    let b = curve.bbox();
    let (wx, wy) = (0.05 * (b[1] - b[0]), 0.05 * (b[3] - b[2]));
    let fr = Frame::new([b[0] - wx, b[1] + wx, b[2] - wy, b[3] + wy]);
    let mut s = fr.open();
    s.push_str(&fr.boundary(curve));
    for p in cut_points {
        let (x, y) = fr.map(p);
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.6\" fill=\"#d62728\"/>");
    }
    s.push_str("</svg>\n");
    s
}
