//! Minkowski distance to the boundary, projection sets and the distance gradient.

use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::Serialize;

use crate::boundary::BoundaryCurve;
use crate::error::{Error, Result};
use crate::gauge::Gauge2;
use crate::linalg::{angle_dist, wrap_angle};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;
/// Feet closer than this in angle are the same foot.
pub const FOOT_ANGLE_SEPARATION: f64 = 1e-5;
/// Feet closer than this fraction of the diameter are the same foot.
pub const FOOT_CHORD_SEPARATION: f64 = 1e-6;
/// Points this close to the boundary are boundary points.
pub const BOUNDARY_BAND: f64 = 1e-9;
const BASE_STARTS: usize = 32;
const GOLDEN_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Foot {
    pub theta: f64,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub distance: f64,
    pub feet: Vec<Foot>,
    pub singular: bool,
}

impl Projection {
    pub fn foot(&self) -> &Foot {
        &self.feet[0]
    }
}

/// Gauge, polar gauge and boundary bundled with the derived search parameters.
#[derive(Debug, Clone)]
pub struct Geometry {
    gauge: Gauge2,
    polar: Gauge2,
    curve: BoundaryCurve,
    starts: usize,
    diam_polar: f64,
    cluster_tol: f64,
}

/// `h(θ) = ρ⁰(x − Y(θ))` with its first two θ-derivatives.
fn h_jet(polar: &Gauge2, curve: &BoundaryCurve, x: &Vector2<f64>, theta: f64) -> (f64, f64, f64) {
    let j = curve.jet(theta);
    let z = x - j.y;
    match polar.jet(&z) {
        Ok((h, g, hh)) => {
            let dh = -g.dot(&j.dy);
            let ddh = j.dy.dot(&(hh * j.dy)) - g.dot(&j.ddy);
            (h, dh, ddh)
        }
        Err(_) => (polar.eval(&z), 0.0, f64::INFINITY),
    }
}

/// Minimizes `f` on `[lo, hi]`, starting from a golden-section bracket and finishing with
/// safeguarded Newton steps on `f'`.
fn refine<V: Fn(f64) -> f64, J: Fn(f64) -> (f64, f64, f64)>(value: &V, jet: &J, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    while hi - lo > GOLDEN_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = value(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = value(x2);
        }
    }
    let (mut x, mut best) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..60 {
        let (v, d, dd) = jet(x);
        if v < best {
            best = v;
        }
        if d == 0.0 {
            return (x, v);
        }
        if d < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let mut next = if dd > 0.0 && dd.is_finite() { x - d / dd } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-14 || hi - lo < 1e-14 {
            let fv = value(next);
            return if fv <= v { (next, fv) } else { (x, v) };
        }
        x = next;
    }
    let v = value(x);
    (x, v.min(best))
}

/// All local minima of a 2π-periodic function found from `starts` equispaced samples.
pub(crate) fn periodic_minima<V: Fn(f64) -> f64, J: Fn(f64) -> (f64, f64, f64)>(
    value: &V,
    jet: &J,
    starts: usize,
) -> Vec<(f64, f64)> {
    let step = TAU / starts as f64;
    let vals: Vec<f64> = (0..starts).map(|k| value(step * k as f64)).collect();
    let mut out = Vec::new();
    for k in 0..starts {
        let prev = vals[(k + starts - 1) % starts];
        let next = vals[(k + 1) % starts];
        if vals[k] <= prev && vals[k] <= next {
            let c = step * k as f64;
            let (t, v) = refine(value, jet, c - step, c + step);
            out.push((wrap_angle(t), v));
        }
    }
    out
}

impl Geometry {
    pub fn new(gauge: Gauge2, curve: BoundaryCurve) -> Result<Self> {
        let polar = gauge.polar()?;
        let mut starts = BASE_STARTS;
        if curve.max_abs_curvature() * curve.diameter() > 20.0 {
            starts *= 2;
        }
        let n = 256;
        let pts: Vec<Vector2<f64>> = (0..n).map(|k| curve.point(TAU * k as f64 / n as f64)).collect();
        let mut diam_polar: f64 = 0.0;
        for p in &pts {
            for q in &pts {
                diam_polar = diam_polar.max(polar.eval(&(p - q)));
            }
        }
        Ok(Geometry {
            gauge,
            polar,
            curve,
            starts,
            diam_polar,
            cluster_tol: DEFAULT_CLUSTER_TOL,
        })
    }

    pub fn with_cluster_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-3) {
            return Err(Error::Precondition(format!("cluster tolerance {tol:e} outside (0, 1e-3]")));
        }
        self.cluster_tol = tol;
        Ok(self)
    }

    pub fn gauge(&self) -> &Gauge2 {
        &self.gauge
    }

    pub fn polar(&self) -> &Gauge2 {
        &self.polar
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn starts(&self) -> usize {
        self.starts
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    /// Sampled `ρ⁰`-diameter of the domain, `max ρ⁰(y − y')` over boundary pairs.
    pub fn diam_polar(&self) -> f64 {
        self.diam_polar
    }

    fn foot(&self, theta: f64) -> Foot {
        let p = self.curve.point(theta);
        Foot {
            theta,
            point: [p.x, p.y],
        }
    }

    fn distinct(&self, a: f64, b: f64) -> bool {
        let chord = (self.curve.point(a) - self.curve.point(b)).norm();
        angle_dist(a, b) > FOOT_ANGLE_SEPARATION
            && chord > FOOT_CHORD_SEPARATION * self.curve.diameter()
    }

    /// Euclidean distance to the boundary with its nearest parameter.
    fn euclidean_to_boundary(&self, x: &Vector2<f64>) -> (f64, f64) {
        let e = Gauge2::euclidean();
        let value = |t: f64| (x - self.curve.point(t)).norm();
        let jet = |t: f64| h_jet(&e, &self.curve, x, t);
        periodic_minima(&value, &jet, self.starts)
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, v)| (v, t))
            .expect("at least one minimum")
    }

    pub fn project(&self, x: &Vector2<f64>) -> Result<Projection> {
        if !self.curve.contains(x) {
            let (dist, theta) = self.euclidean_to_boundary(x);
            if dist <= BOUNDARY_BAND {
                return Ok(Projection {
                    distance: 0.0,
                    feet: vec![self.foot(theta)],
                    singular: false,
                });
            }
            return Err(Error::Domain(format!(
                "point ({}, {}) lies outside the closed domain",
                x.x, x.y
            )));
        }
        let value = |t: f64| self.polar.eval(&(x - self.curve.point(t)));
        let jet = |t: f64| h_jet(&self.polar, &self.curve, x, t);
        let mut minima = periodic_minima(&value, &jet, self.starts);
        let global = minima
            .iter()
            .map(|m| m.1)
            .fold(f64::INFINITY, f64::min);
        if global <= BOUNDARY_BAND {
            let best = minima.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
            return Ok(Projection {
                distance: 0.0,
                feet: vec![self.foot(best)],
                singular: false,
            });
        }
        minima.retain(|m| m.1 <= global + self.cluster_tol);
        minima.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut feet: Vec<f64> = Vec::new();
        for (t, _) in &minima {
            if feet.iter().all(|f| self.distinct(*f, *t)) {
                feet.push(*t);
            }
        }
        Ok(Projection {
            distance: global,
            singular: feet.len() >= 2,
            feet: feet.into_iter().map(|t| self.foot(t)).collect(),
        })
    }

    pub fn distance(&self, x: &Vector2<f64>) -> Result<f64> {
        Ok(self.project(x)?.distance)
    }

    /// `Dd(x) = ν(x₀)/ρ(ν(x₀))` at a regular interior point.
    pub fn grad_distance(&self, x: &Vector2<f64>) -> Result<Vector2<f64>> {
        let proj = self.project(x)?;
        if proj.singular {
            return Err(Error::Singular(Box::new(proj)));
        }
        let nu = self.curve.sample(proj.foot().theta).normal_in;
        Ok(nu / self.gauge.eval(&nu))
    }

    /// Upper bound on the distance from equispaced boundary samples.
    pub fn brute_distance(&self, x: &Vector2<f64>, samples: usize) -> Result<f64> {
        if samples < 1000 {
            return Err(Error::Precondition("brute_distance needs at least 1000 samples".into()));
        }
        Ok((0..samples)
            .map(|k| self.polar.eval(&(x - self.curve.point(TAU * k as f64 / samples as f64))))
            .fold(f64::INFINITY, f64::min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;
    use std::f64::consts::FRAC_PI_2;

    fn disk() -> Geometry {
        Geometry::new(Gauge2::euclidean(), BoundaryCurve::circle(1.0).unwrap()).unwrap()
    }

    fn ellipse() -> Geometry {
        Geometry::new(Gauge2::euclidean(), BoundaryCurve::ellipse(2.0, 1.0).unwrap()).unwrap()
    }

    fn aniso() -> Geometry {
        let g = Gauge2::ellipsoidal(Matrix2::new(4.0, 0.0, 0.0, 1.0)).unwrap();
        Geometry::new(g, BoundaryCurve::ellipse(2.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn disk_regular_point() {
        let p = disk().project(&Vector2::new(0.5, 0.0)).unwrap();
        assert!((p.distance - 0.5).abs() < 1e-14);
        assert!(!p.singular);
        assert!((p.foot().point[0] - 1.0).abs() < 1e-12 && p.foot().point[1].abs() < 1e-12);
    }

    #[test]
    fn disk_center_is_singular() {
        let p = disk().project(&Vector2::zeros()).unwrap();
        assert!((p.distance - 1.0).abs() < 1e-14);
        assert!(p.singular && p.feet.len() > 2);
    }

    #[test]
    fn ellipse_medial_axis_point() {
        let g = ellipse();
        let x = Vector2::new(1.4, 0.0);
        let p = g.project(&x).unwrap();
        assert!(p.singular);
        assert_eq!(p.feet.len(), 2);
        assert!((p.feet[0].point[1] + p.feet[1].point[1]).abs() < 1e-8);
        let brute = g.brute_distance(&x, 1_000_000).unwrap();
        assert!((brute - p.distance).abs() < 1e-9 && brute >= p.distance - 1e-14);
    }

    #[test]
    fn anisotropic_closed_form() {
        let g = aniso();
        let x = Vector2::new(1.0, 0.0);
        assert!((g.polar().eval(&x) - 0.5).abs() < 1e-15);
        let p = g.project(&x).unwrap();
        assert!((p.distance - 0.5).abs() < 1e-13);
        assert!((g.brute_distance(&x, 100_000).unwrap() - 0.5).abs() < 1e-8);
        let grad = g.grad_distance(&x).unwrap();
        assert!((grad - Vector2::new(-0.5, 0.0)).norm() < 1e-12);
        let h = 1e-5;
        let fd = Vector2::new(
            (g.distance(&(x + Vector2::x() * h)).unwrap() - g.distance(&(x - Vector2::x() * h)).unwrap()) / (2.0 * h),
            (g.distance(&(x + Vector2::y() * h)).unwrap() - g.distance(&(x - Vector2::y() * h)).unwrap()) / (2.0 * h),
        );
        assert!((fd - grad).norm() < 1e-5);
        for k in 0..40 {
            let t = 0.157 * k as f64;
            let x = Vector2::new(2.0 * t.cos(), t.sin()) * (0.1 + 0.02 * k as f64);
            let d = g.distance(&x).unwrap();
            assert!((d - (1.0 - g.polar().eval(&x))).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_examples() {
        let g = disk();
        let d = g.grad_distance(&Vector2::new(0.5, 0.0)).unwrap();
        assert!((d - Vector2::new(-1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(g.grad_distance(&Vector2::zeros()), Err(Error::Singular(_))));
        let a = aniso();
        for k in 0..20 {
            let x = Vector2::new(0.3 * (k as f64).cos(), 0.4 * (k as f64).sin());
            if let Ok(gr) = a.grad_distance(&x) {
                assert!((a.gauge().eval(&gr) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn outside_points_are_domain_errors() {
        let g = disk();
        assert!(matches!(g.project(&Vector2::new(1.5, 0.0)), Err(Error::Domain(_))));
        let b = g.project(&Vector2::new(1.0, 0.0)).unwrap();
        assert_eq!(b.distance, 0.0);
        let t = FRAC_PI_2;
        let on = g.curve().point(t);
        assert_eq!(g.project(&on).unwrap().distance, 0.0);
    }

    #[test]
    fn brute_agrees_on_ellipse_and_superellipse() {
        let g = ellipse();
        for k in 0..100 {
            let t = 0.37 * k as f64;
            let s = ((k * 7919 % 100) as f64 / 100.0).sqrt() * 0.97;
            let x = g.curve().radial_point(t, s);
            let p = g.project(&x).unwrap();
            let b = g.brute_distance(&x, 20_000).unwrap();
            assert!((b - p.distance).abs() < 1e-5, "{x:?}");
            assert!(b >= p.distance - 1e-12);
        }
        let s = Geometry::new(Gauge2::euclidean(), BoundaryCurve::superellipse(1.0, 1.0, 4).unwrap()).unwrap();
        let p = s.project(&Vector2::zeros()).unwrap();
        assert!((s.brute_distance(&Vector2::zeros(), 100_000).unwrap() - p.distance).abs() < 1e-6);
        assert!((p.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_requires_samples() {
        assert!(disk().brute_distance(&Vector2::zeros(), 10).is_err());
    }

    #[test]
    fn custom_gauge_vanishes_on_the_boundary() {
        use crate::gauge::QuarticBlend;
        use std::sync::Arc;
        let g = Geometry::new(
            Gauge2::custom(Arc::new(QuarticBlend { weight: 0.5 })).unwrap(),
            BoundaryCurve::superellipse(1.0, 0.8, 4).unwrap(),
        )
        .unwrap();
        for k in 0..64 {
            let y = g.curve().point(TAU * (k as f64 + 0.5) / 64.0);
            assert!(g.distance(&y).unwrap().abs() <= 1e-9, "boundary sample {k}");
        }
    }
}
