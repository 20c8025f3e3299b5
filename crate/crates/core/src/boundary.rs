//! Closed C² planar boundary curves, counterclockwise in the native angle θ ∈ [0, 2π).

use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cross, perp, wrap_angle};

const ADMISSION_SAMPLES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CurveFamily {
    Circle {
        #[serde(rename = "R")]
        r: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `|x/a|ᵖ + |y/b|ᵖ = 1` for even `p`, traced in polar form.
    Superellipse {
        a: f64,
        b: f64,
        p: u32,
    },
    /// Polar curve `r(θ) = r0 + Σₖ cₖ cos kθ + sₖ sin kθ`, `k = 1, 2, …`.
    Fourier {
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub theta: f64,
    pub point: Vector2<f64>,
    pub tangent: Vector2<f64>,
    pub normal_in: Vector2<f64>,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    family: CurveFamily,
    diameter: f64,
    bbox: [f64; 4],
    max_abs_kappa: f64,
}

/// Position and its first two θ-derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub y: Vector2<f64>,
    pub dy: Vector2<f64>,
    pub ddy: Vector2<f64>,
}

fn polar_jet(theta: f64, r: f64, dr: f64, ddr: f64) -> Jet {
    let u = Vector2::new(theta.cos(), theta.sin());
    let w = perp(&u);
    Jet {
        y: u * r,
        dy: u * dr + w * r,
        ddy: u * (ddr - r) + w * (2.0 * dr),
    }
}

impl BoundaryCurve {
    pub fn new(family: CurveFamily) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidCurve(format!("{name} must be positive and finite (got {v})")))
            }
        };
        match &family {
            CurveFamily::Circle { r } => positive("R", *r)?,
            CurveFamily::Ellipse { a, b } => {
                positive("a", *a)?;
                positive("b", *b)?;
            }
            CurveFamily::Superellipse { a, b, p } => {
                positive("a", *a)?;
                positive("b", *b)?;
                if *p < 2 || p % 2 != 0 {
                    return Err(Error::InvalidCurve(format!(
                        "superellipse exponent p must be even and >= 2 (got {p})"
                    )));
                }
            }
            CurveFamily::Fourier { r0, cos, sin } => {
                positive("r0", *r0)?;
                if cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(Error::InvalidCurve("fourier coefficients must be finite".into()));
                }
            }
        }
        let mut curve = BoundaryCurve {
            family,
            diameter: 0.0,
            bbox: [0.0; 4],
            max_abs_kappa: 0.0,
        };
        let pts: Vec<Vector2<f64>> = (0..ADMISSION_SAMPLES)
            .map(|k| curve.point(TAU * k as f64 / ADMISSION_SAMPLES as f64))
            .collect();
        if let CurveFamily::Fourier { .. } = curve.family {
            curve.admit_fourier(&pts)?;
        }
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &pts {
            bbox[0] = bbox[0].min(p.x);
            bbox[1] = bbox[1].max(p.x);
            bbox[2] = bbox[2].min(p.y);
            bbox[3] = bbox[3].max(p.y);
        }
        let mut diam: f64 = 0.0;
        for (i, p) in pts.iter().enumerate().step_by(2) {
            for q in &pts[i + 1..] {
                diam = diam.max((p - q).norm());
            }
        }
        curve.bbox = bbox;
        curve.diameter = diam;
        curve.max_abs_kappa = (0..ADMISSION_SAMPLES)
            .map(|k| curve.sample(TAU * k as f64 / ADMISSION_SAMPLES as f64).kappa.abs())
            .fold(0.0, f64::max);
        Ok(curve)
    }

    pub fn circle(r: f64) -> Result<Self> {
        Self::new(CurveFamily::Circle { r })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(CurveFamily::Ellipse { a, b })
    }

    pub fn superellipse(a: f64, b: f64, p: u32) -> Result<Self> {
        Self::new(CurveFamily::Superellipse { a, b, p })
    }

    pub fn fourier(r0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(CurveFamily::Fourier { r0, cos, sin })
    }

    fn admit_fourier(&self, pts: &[Vector2<f64>]) -> Result<()> {
        let n = pts.len();
        for (k, p) in pts.iter().enumerate() {
            let r = self.radius(TAU * k as f64 / n as f64).0;
            if r <= 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "fourier radius is not positive at theta = {:.6} (r = {r})",
                    TAU * k as f64 / n as f64
                )));
            }
            debug_assert!(p.norm() > 0.0);
        }
        // segment-based self-intersection test on non-adjacent edges
        let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
        let orient = |a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>| cross(&(b - a), &(c - a));
        let mut boxes: Vec<[f64; 4]> = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = seg(i);
            boxes.push([a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y)]);
        }
        for i in 0..n {
            let (a, b) = seg(i);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (bi, bj) = (&boxes[i], &boxes[j]);
                if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                    continue;
                }
                let (c, d) = seg(j);
                let d1 = orient(&a, &b, &c);
                let d2 = orient(&a, &b, &d);
                let d3 = orient(&c, &d, &a);
                let d4 = orient(&c, &d, &b);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return Err(Error::InvalidCurve(format!(
                        "fourier curve self-intersects near theta = {:.6}",
                        TAU * i as f64 / n as f64
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &CurveFamily {
        &self.family
    }

    /// Euclidean diameter estimated from boundary samples.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `[xmin, xmax, ymin, ymax]` of the sampled curve.
    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.max_abs_kappa
    }

    /// Radial function and its derivatives for the polar-form families.
    fn radius(&self, theta: f64) -> (f64, f64, f64) {
        match &self.family {
            CurveFamily::Circle { r } => (*r, 0.0, 0.0),
            CurveFamily::Fourier { r0, cos, sin } => {
                let (mut r, mut dr, mut ddr) = (*r0, 0.0, 0.0);
                for (k, c) in cos.iter().enumerate() {
                    let m = (k + 1) as f64;
                    let (s, co) = (m * theta).sin_cos();
                    r += c * co;
                    dr -= c * m * s;
                    ddr -= c * m * m * co;
                }
                for (k, b) in sin.iter().enumerate() {
                    let m = (k + 1) as f64;
                    let (s, co) = (m * theta).sin_cos();
                    r += b * s;
                    dr += b * m * co;
                    ddr -= b * m * m * s;
                }
                (r, dr, ddr)
            }
            CurveFamily::Superellipse { a, b, p } => {
                let pf = *p as f64;
                let (s, c) = theta.sin_cos();
                let (ua, ub) = (c / a, s / b);
                let (da, db) = (-s / a, c / b);
                let pw = |x: f64, k: u32| x.powi(k as i32);
                let f = pw(ua, *p) + pw(ub, *p);
                let df = pf * (pw(ua, p - 1) * da + pw(ub, p - 1) * db);
                let ddf = pf * ((pf - 1.0) * (pw(ua, p - 2) * da * da + pw(ub, p - 2) * db * db) - f);
                let r = f.powf(-1.0 / pf);
                let dr = -r / (pf * f) * df;
                let ddr = -(1.0 / pf) * ((-1.0 / pf - 1.0) * r / (f * f) * df * df + r / f * ddf);
                (r, dr, ddr)
            }
            CurveFamily::Ellipse { .. } => unreachable!("ellipse uses its affine parametrization"),
        }
    }

    pub fn jet(&self, theta: f64) -> Jet {
        match &self.family {
            CurveFamily::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                Jet {
                    y: Vector2::new(a * c, b * s),
                    dy: Vector2::new(-a * s, b * c),
                    ddy: Vector2::new(-a * c, -b * s),
                }
            }
            _ => {
                let (r, dr, ddr) = self.radius(theta);
                polar_jet(theta, r, dr, ddr)
            }
        }
    }

    pub fn point(&self, theta: f64) -> Vector2<f64> {
        self.jet(theta).y
    }

    pub fn sample(&self, theta: f64) -> BoundarySample {
        let theta = wrap_angle(theta);
        let j = self.jet(theta);
        let speed = j.dy.norm();
        let tangent = j.dy / speed;
        BoundarySample {
            theta,
            point: j.y,
            tangent,
            normal_in: perp(&tangent),
            kappa: cross(&j.dy, &j.ddy) / (speed * speed * speed),
        }
    }

    /// Open-interior membership.
    pub fn contains(&self, x: &Vector2<f64>) -> bool {
        match &self.family {
            CurveFamily::Circle { r } => x.norm() < *r,
            CurveFamily::Ellipse { a, b } => (x.x / a).powi(2) + (x.y / b).powi(2) < 1.0,
            CurveFamily::Superellipse { a, b, p } => {
                (x.x / a).powi(*p as i32) + (x.y / b).powi(*p as i32) < 1.0
            }
            CurveFamily::Fourier { .. } => {
                let n = x.norm();
                n == 0.0 || n < self.radius(x.y.atan2(x.x)).0
            }
        }
    }

    /// Interior point `s·Y(θ)` for `s ∈ [0, 1)`; every family is star-shaped about the origin.
    pub fn radial_point(&self, theta: f64, s: f64) -> Vector2<f64> {
        self.point(theta) * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fd_check(c: &BoundaryCurve) {
        let h = 1e-4;
        for k in 0..256 {
            let t = TAU * (k as f64 + 0.37) / 256.0;
            let s = c.sample(t);
            let (p0, pp, pm) = (c.point(t), c.point(t + h), c.point(t - h));
            let d1 = (pp - pm) / (2.0 * h);
            let d2 = (pp - 2.0 * p0 + pm) / (h * h);
            let tan = d1.normalize();
            let kappa = cross(&d1, &d2) / d1.norm().powi(3);
            assert!((tan - s.tangent).norm() < 1e-6, "{:?} tangent at {t}", c.family());
            assert!((perp(&tan) - s.normal_in).norm() < 1e-6);
            assert!((kappa - s.kappa).abs() < 1e-6 * (1.0 + s.kappa.abs()), "{kappa} vs {} at {t}", s.kappa);
            assert!(s.tangent.dot(&s.normal_in).abs() < 1e-15);
        }
    }

    #[test]
    fn circle_sample() {
        let s = BoundaryCurve::circle(1.0).unwrap().sample(0.0);
        assert!((s.point - Vector2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((s.normal_in - Vector2::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((s.kappa - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ellipse_curvature() {
        let c = BoundaryCurve::ellipse(2.0, 1.0).unwrap();
        let s = c.sample(0.0);
        assert!((s.point - Vector2::new(2.0, 0.0)).norm() < 1e-15);
        assert!((s.kappa - 2.0).abs() < 1e-14);
        let s = c.sample(FRAC_PI_2);
        assert!((s.point - Vector2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((s.kappa - 0.25).abs() < 1e-14);
        for k in 0..50 {
            let t = 0.13 * k as f64;
            let closed = 2.0 / (4.0 * t.sin().powi(2) + t.cos().powi(2)).powf(1.5);
            assert!((c.sample(t).kappa - closed).abs() < 1e-13);
        }
    }

    #[test]
    fn finite_differences_match() {
        fd_check(&BoundaryCurve::circle(1.3).unwrap());
        fd_check(&BoundaryCurve::ellipse(2.0, 1.0).unwrap());
        fd_check(&BoundaryCurve::superellipse(1.0, 1.0, 4).unwrap());
        fd_check(&BoundaryCurve::superellipse(1.5, 0.7, 2).unwrap());
        fd_check(&BoundaryCurve::fourier(1.0, vec![0.0, 0.0, 0.15], vec![0.0, 0.05]).unwrap());
    }

    #[test]
    fn superellipse_two_is_ellipse_curve() {
        let s = BoundaryCurve::superellipse(2.0, 1.0, 2).unwrap();
        for k in 0..40 {
            let t = 0.157 * k as f64;
            let p = s.point(t);
            assert!(((p.x / 2.0).powi(2) + p.y.powi(2) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn superellipse_curvature_is_continuous() {
        let c = BoundaryCurve::superellipse(1.0, 1.0, 4).unwrap();
        let n = 20_000;
        let ks: Vec<f64> = (0..=n).map(|k| c.sample(TAU * k as f64 / n as f64).kappa).collect();
        let jump = ks.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(jump < 1e-2, "max jump {jump}");
        assert!(ks.iter().all(|k| k.is_finite() && *k >= -1e-12));
    }

    #[test]
    fn contains_examples() {
        let c = BoundaryCurve::circle(1.0).unwrap();
        assert!(c.contains(&Vector2::zeros()));
        assert!(!c.contains(&Vector2::new(1.0, 0.0)));
        assert!(BoundaryCurve::ellipse(2.0, 1.0).unwrap().contains(&Vector2::new(1.9, 0.0)));
        let f = BoundaryCurve::fourier(1.0, vec![0.0, 0.0, 0.15], vec![]).unwrap();
        assert!(f.contains(&Vector2::new(1.1, 0.0)));
        assert!(!f.contains(&Vector2::new(0.9 * (PI / 3.0).cos(), 0.9 * (PI / 3.0).sin())));
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(matches!(BoundaryCurve::circle(-1.0), Err(Error::InvalidCurve(_))));
        assert!(BoundaryCurve::superellipse(1.0, 1.0, 3).is_err());
        assert!(BoundaryCurve::fourier(1.0, vec![1.5], vec![]).is_err());
    }

    #[test]
    fn diameter_and_bbox() {
        let c = BoundaryCurve::ellipse(2.0, 1.0).unwrap();
        assert!((c.diameter() - 4.0).abs() < 1e-9);
        let b = c.bbox();
        assert!((b[0] + 2.0).abs() < 1e-12 && (b[3] - 1.0).abs() < 1e-5);
    }
}
