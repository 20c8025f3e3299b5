//! Transport rays `Ψ(θ, t) = Y(θ) + t·Dρ(ν(θ))`, the ρ-curvature, cut times and the
//! attenuation factor `M`.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use crate::distance::Geometry;
use crate::error::{Error, Result};
use crate::linalg::angle_dist;
use crate::quadrature::integrate;

/// Maximal angular drift of the foot while a ray is still optimal.
pub const FOOT_TRACK_TOL: f64 = 1e-5;
pub const DEFAULT_TABLE_SIZE: usize = 4096;
/// Interpolated τ values further than this from a probe recomputation are not trusted.
pub const TABLE_VALIDATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeingartenData {
    pub w: Matrix2<f64>,
    pub kappa_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayFrame {
    pub theta: f64,
    pub foot: Vector2<f64>,
    pub normal: Vector2<f64>,
    /// `p(x₀) = Dρ(ν(x₀))`.
    pub direction: Vector2<f64>,
    /// Euclidean curvature of the boundary at the foot.
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub w: Matrix2<f64>,
    pub tau: f64,
    pub cut_point: Vector2<f64>,
}

/// `W(x₀)` from `W e₁ = κ D²ρ(ν) e₁` and `W Dρ(ν) = 0`.
pub fn boundary_weingarten(geom: &Geometry, theta: f64) -> Result<WeingartenData> {
    let s = geom.curve().sample(theta);
    let h = geom.gauge().hess(&s.normal_in)?;
    let p = geom.gauge().grad(&s.normal_in)?;
    let b = Matrix2::from_columns(&[s.tangent, p]);
    let b_inv = b
        .try_inverse()
        .ok_or_else(|| Error::Geometry(format!("ray direction tangent to the boundary at {theta}")))?;
    let lhs = Matrix2::from_columns(&[h * s.tangent * s.kappa, Vector2::zeros()]);
    let w = lhs * b_inv;
    Ok(WeingartenData {
        w,
        kappa_tilde: w.trace(),
    })
}

impl RayFrame {
    /// Boundary data at `θ` with the given cut time.
    pub fn with_tau(geom: &Geometry, theta: f64, tau: f64) -> Result<Self> {
        let s = geom.curve().sample(theta);
        let wd = boundary_weingarten(geom, s.theta)?;
        let direction = geom.gauge().grad(&s.normal_in)?;
        Ok(RayFrame {
            theta: s.theta,
            foot: s.point,
            normal: s.normal_in,
            direction,
            kappa: s.kappa,
            kappa_tilde: wd.kappa_tilde,
            w: wd.w,
            tau,
            cut_point: s.point + direction * tau,
        })
    }

    pub fn ray_point(&self, t: f64) -> Vector2<f64> {
        self.foot + self.direction * t
    }

    pub fn boundary_weingarten(&self) -> WeingartenData {
        WeingartenData {
            w: self.w,
            kappa_tilde: self.kappa_tilde,
        }
    }

    /// `1/κ̃` for `κ̃ > 0`, otherwise infinite.
    pub fn focal_time(&self) -> f64 {
        if self.kappa_tilde > 0.0 {
            1.0 / self.kappa_tilde
        } else {
            f64::INFINITY
        }
    }

    /// `V(t) = V(0)[I − tV(0)]⁻¹`.
    pub fn weingarten_along_ray(&self, t: f64) -> Result<WeingartenData> {
        if !(t >= 0.0) || t >= self.focal_time() {
            return Err(Error::Domain(format!(
                "ray parameter {t} outside [0, focal time {})",
                self.focal_time()
            )));
        }
        let a = Matrix2::identity() - self.w * t;
        let inv = a
            .try_inverse()
            .ok_or_else(|| Error::Domain(format!("I - tW is singular at t = {t}")))?;
        let v = self.w * inv;
        Ok(WeingartenData {
            w: v,
            kappa_tilde: self.kappa_tilde / (1.0 - t * self.kappa_tilde),
        })
    }

    /// `det[I − tW(x₀)]`.
    pub fn jacobian(&self, t: f64) -> f64 {
        (Matrix2::identity() - self.w * t).determinant()
    }

    /// `M_{x₀}(d+s, d+t) = (1 − (d+t)κ̃)/(1 − (d+s)κ̃)`, which is `M_x(t−s)` for `x` at depth
    /// `d+s` on this ray.
    pub fn m_factor(&self, d: f64, s: f64, t: f64) -> Result<f64> {
        if !(d >= 0.0 && s >= 0.0 && s <= t) {
            return Err(Error::Domain(format!("m_factor needs 0 <= s <= t and d >= 0 (d={d}, s={s}, t={t})")));
        }
        let den = 1.0 - (d + s) * self.kappa_tilde;
        let num = 1.0 - (d + t) * self.kappa_tilde;
        if den <= 0.0 || num < 0.0 {
            return Err(Error::Domain(format!(
                "m_factor queried beyond the focal time (d+s={}, d+t={})",
                d + s,
                d + t
            )));
        }
        Ok(num / den)
    }

    /// `exp(−∫_{d+s}^{d+t} trace V(σ) dσ)` with `V(σ)` assembled as a matrix at every node.
    pub fn m_factor_integral(&self, d: f64, s: f64, t: f64, tol: f64) -> Result<f64> {
        if !(d >= 0.0 && s >= 0.0 && s <= t) {
            return Err(Error::Domain("m_factor_integral needs 0 <= s <= t and d >= 0".into()));
        }
        if d + t >= self.focal_time() {
            return Err(Error::Domain("m_factor_integral reaches the focal time".into()));
        }
        let mut failed = None;
        let q = integrate(
            |sigma| match self.weingarten_along_ray(sigma) {
                Ok(v) => v.w.trace(),
                Err(e) => {
                    failed = Some(e);
                    0.0
                }
            },
            d + s,
            d + t,
            tol,
        )?;
        if let Some(e) = failed {
            return Err(e);
        }
        Ok((-q.value).exp())
    }
}

/// Whether `Ψ(θ, s)` is still reached optimally from its own foot. A ray point outside `Ω̄`
/// has already crossed the boundary, so it is not.
fn ray_is_optimal(geom: &Geometry, frame: &RayFrame, s: f64, tol: f64) -> Result<bool> {
    let x = frame.ray_point(s);
    if !geom.curve().contains(&x) {
        return Ok(false);
    }
    let p = geom.project(&x)?;
    Ok(!p.singular
        && angle_dist(p.foot().theta, frame.theta) <= FOOT_TRACK_TOL
        && (p.distance - s).abs() <= tol)
}

/// Cut time `τ(θ)` by doubling then bisection to width `tol`.
pub fn cut_time(geom: &Geometry, theta: f64, tol: f64) -> Result<RayFrame> {
    if !(1e-10..=1e-4).contains(&tol) {
        return Err(Error::Precondition(format!("cut tolerance {tol:e} outside [1e-10, 1e-4]")));
    }
    let base = RayFrame::with_tau(geom, theta, 0.0)?;
    let upper = base.focal_time().min(geom.diam_polar());
    let mut lo = 0.0;
    let mut s = upper / 64.0;
    let hi;
    loop {
        if s >= upper {
            if ray_is_optimal(geom, &base, upper, tol)? {
                return RayFrame::with_tau(geom, theta, upper);
            }
            hi = upper;
            break;
        }
        if ray_is_optimal(geom, &base, s, tol)? {
            lo = s;
            s *= 2.0;
        } else {
            hi = s;
            break;
        }
    }
    let mut hi = hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ray_is_optimal(geom, &base, mid, tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    RayFrame::with_tau(geom, theta, 0.5 * (lo + hi))
}

/// Cut times at `n_theta` equispaced parameters, in parameter order.
pub fn cut_locus(geom: &Geometry, n_theta: usize, tol: f64) -> Result<Vec<RayFrame>> {
    if n_theta < 16 {
        return Err(Error::Precondition("cut_locus needs n_theta >= 16".into()));
    }
    (0..n_theta)
        .into_par_iter()
        .map(|k| cut_time(geom, TAU * k as f64 / n_theta as f64, tol))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableStats {
    pub size: usize,
    pub cut_tol: f64,
    /// `μ = min τ`.
    pub tau_min: f64,
    /// `T = max τ`.
    pub tau_max: f64,
    pub kappa_tilde_min: f64,
    pub kappa_tilde_max: f64,
    /// `K̃₋ = max (−κ̃)₊`.
    pub kappa_tilde_neg: f64,
    pub validation_probes: usize,
    pub validation_max_error: f64,
    pub flagged_intervals: usize,
}

/// Periodic table of cut times with monotone cubic interpolation.
///
/// Intervals whose midpoint probe disagrees with the interpolant are flagged, and lookups
/// there fall back to a fresh cut-time computation.
#[derive(Debug, Clone)]
pub struct CutTable {
    geom: Geometry,
    tol: f64,
    tau: Vec<f64>,
    slope: Vec<f64>,
    kappa_tilde: Vec<f64>,
    flagged: Vec<bool>,
    stats: TableStats,
}

fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = (0..n).map(|k| (y[(k + 1) % n] - y[k]) / h).collect();
    (0..n)
        .map(|k| {
            let a = delta[(k + n - 1) % n];
            let b = delta[k];
            if a * b <= 0.0 {
                0.0
            } else {
                2.0 / (1.0 / a + 1.0 / b)
            }
        })
        .collect()
}

impl CutTable {
    pub fn build(geom: &Geometry, size: usize, tol: f64) -> Result<Self> {
        if size < 16 {
            return Err(Error::Precondition("cut table needs at least 16 entries".into()));
        }
        let h = TAU / size as f64;
        let frames = cut_locus(geom, size, tol)?;
        let tau: Vec<f64> = frames.iter().map(|f| f.tau).collect();
        let kappa_tilde: Vec<f64> = frames.iter().map(|f| f.kappa_tilde).collect();
        let slope = pchip_slopes(&tau, h);
        let mut table = CutTable {
            geom: geom.clone(),
            tol,
            tau,
            slope,
            kappa_tilde,
            flagged: vec![false; size],
            stats: TableStats {
                size,
                cut_tol: tol,
                tau_min: 0.0,
                tau_max: 0.0,
                kappa_tilde_min: 0.0,
                kappa_tilde_max: 0.0,
                kappa_tilde_neg: 0.0,
                validation_probes: size,
                validation_max_error: 0.0,
                flagged_intervals: 0,
            },
        };
        let probes: Vec<f64> = (0..size)
            .into_par_iter()
            .map(|k| cut_time(geom, h * (k as f64 + 0.5), tol).map(|f| f.tau))
            .collect::<Result<_>>()?;
        let mut max_err: f64 = 0.0;
        for (k, exact) in probes.iter().enumerate() {
            let err = (table.interpolate(h * (k as f64 + 0.5)) - exact).abs();
            max_err = max_err.max(err);
            if err > TABLE_VALIDATION_TOL {
                table.flagged[k] = true;
            }
        }
        let st = &mut table.stats;
        st.tau_min = table.tau.iter().chain(&probes).copied().fold(f64::INFINITY, f64::min);
        st.tau_max = table.tau.iter().chain(&probes).copied().fold(0.0, f64::max);
        st.kappa_tilde_min = table.kappa_tilde.iter().copied().fold(f64::INFINITY, f64::min);
        st.kappa_tilde_max = table.kappa_tilde.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        st.kappa_tilde_neg = (-st.kappa_tilde_min).max(0.0);
        st.validation_max_error = max_err;
        st.flagged_intervals = table.flagged.iter().filter(|f| **f).count();
        Ok(table)
    }

    fn interpolate(&self, theta: f64) -> f64 {
        let n = self.tau.len();
        let h = TAU / n as f64;
        let x = theta.rem_euclid(TAU) / h;
        let k = (x.floor() as usize).min(n - 1);
        let u = x - k as f64;
        let (y0, y1) = (self.tau[k], self.tau[(k + 1) % n]);
        let (m0, m1) = (self.slope[k] * h, self.slope[(k + 1) % n] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }

    pub fn tau_at(&self, theta: f64) -> Result<f64> {
        let n = self.tau.len();
        let k = ((theta.rem_euclid(TAU) / (TAU / n as f64)).floor() as usize).min(n - 1);
        if self.flagged[k] {
            return Ok(cut_time(&self.geom, theta, self.tol)?.tau);
        }
        Ok(self.interpolate(theta))
    }

    pub fn frame(&self, theta: f64) -> Result<RayFrame> {
        RayFrame::with_tau(&self.geom, theta, self.tau_at(theta)?)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn stats(&self) -> &TableStats {
        &self.stats
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Table nodes as `(θ, τ, κ̃)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let h = TAU / self.tau.len() as f64;
        (0..self.tau.len()).map(move |k| (h * k as f64, self.tau[k], self.kappa_tilde[k]))
    }
}

/// `W = −D²ρ(Dd)·D²d` from central differences of the distance at a regular point.
pub fn fd_weingarten(geom: &Geometry, x: &Vector2<f64>, step: f64) -> Result<WeingartenData> {
    let d = |dx: f64, dy: f64| geom.distance(&(x + Vector2::new(dx, dy)));
    let h = step;
    let c = d(0.0, 0.0)?;
    let dxx = (d(h, 0.0)? - 2.0 * c + d(-h, 0.0)?) / (h * h);
    let dyy = (d(0.0, h)? - 2.0 * c + d(0.0, -h)?) / (h * h);
    let dxy = (d(h, h)? - d(h, -h)? - d(-h, h)? + d(-h, -h)?) / (4.0 * h * h);
    let hess_d = Matrix2::new(dxx, dxy, dxy, dyy);
    let grad = geom.grad_distance(x)?;
    let w = -geom.gauge().hess(&grad)? * hess_d;
    Ok(WeingartenData {
        w,
        kappa_tilde: w.trace(),
    })
}
