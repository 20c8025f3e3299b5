//! Independent checks of a candidate pair `(u, v)`: weak form, eikonal residual, the ray
//! representation of `v`, the saddle inequalities of `Φ`, `Lip¹_ρ` membership and the bound on `M`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::BoundaryCurve;
use crate::distance::Geometry;
use crate::error::{Error, Result};
use crate::linalg::angle_dist;
use crate::ode::rk45;
use crate::quadrature::{gauss_legendre, integrate};
use crate::solver::{Solver, SourceTerm};
use crate::transport::{cut_time, CutTable};

pub trait Field: Sync {
    fn value(&self, x: &Vector2<f64>) -> Result<f64>;
    /// `None` where the field is not differentiable.
    fn gradient(&self, x: &Vector2<f64>) -> Result<Option<Vector2<f64>>>;
}

/// `u = d_Ω`.
pub struct DistanceField<'a>(pub &'a Geometry);

impl Field for DistanceField<'_> {
    fn value(&self, x: &Vector2<f64>) -> Result<f64> {
        self.0.distance(x)
    }
    fn gradient(&self, x: &Vector2<f64>) -> Result<Option<Vector2<f64>>> {
        match self.0.grad_distance(x) {
            Ok(g) => Ok(Some(g)),
            Err(Error::Singular(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// `scale · v_f`.
pub struct DensityField<'a> {
    pub solver: &'a Solver,
    pub scale: f64,
}

impl Field for DensityField<'_> {
    fn value(&self, x: &Vector2<f64>) -> Result<f64> {
        Ok(self.scale * self.solver.evaluate(x)?.v)
    }
    fn gradient(&self, _: &Vector2<f64>) -> Result<Option<Vector2<f64>>> {
        Ok(None)
    }
}

pub struct ScaledField<'a> {
    pub inner: &'a dyn Field,
    pub factor: f64,
}

impl Field for ScaledField<'_> {
    fn value(&self, x: &Vector2<f64>) -> Result<f64> {
        Ok(self.factor * self.inner.value(x)?)
    }
    fn gradient(&self, x: &Vector2<f64>) -> Result<Option<Vector2<f64>>> {
        Ok(self.inner.gradient(x)?.map(|g| g * self.factor))
    }
}

pub struct ZeroField;

impl Field for ZeroField {
    fn value(&self, _: &Vector2<f64>) -> Result<f64> {
        Ok(0.0)
    }
    fn gradient(&self, _: &Vector2<f64>) -> Result<Option<Vector2<f64>>> {
        Ok(Some(Vector2::zeros()))
    }
}

/// `base + Σ aᵢ φᵢ`.
pub struct BumpPerturbed<'a> {
    pub base: &'a dyn Field,
    pub bumps: Vec<(TestFunction, f64)>,
}

impl Field for BumpPerturbed<'_> {
    fn value(&self, x: &Vector2<f64>) -> Result<f64> {
        Ok(self.base.value(x)? + self.bumps.iter().map(|(b, a)| a * b.value(x)).sum::<f64>())
    }
    fn gradient(&self, x: &Vector2<f64>) -> Result<Option<Vector2<f64>>> {
        Ok(self.base.gradient(x)?.map(|g| {
            self.bumps
                .iter()
                .fold(g, |acc, (b, a)| acc + b.gradient(x) * *a)
        }))
    }
}

/// `φ(x) = (1 − |x−c|²/r²)₊ᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: [f64; 2],
    pub radius: f64,
    pub degree: i32,
}

impl TestFunction {
    pub fn new(center: Vector2<f64>, radius: f64) -> Self {
        TestFunction {
            center: [center.x, center.y],
            radius,
            degree: 4,
        }
    }

    fn c(&self) -> Vector2<f64> {
        Vector2::new(self.center[0], self.center[1])
    }

    pub fn value(&self, x: &Vector2<f64>) -> f64 {
        let q = 1.0 - (x - self.c()).norm_squared() / (self.radius * self.radius);
        if q <= 0.0 {
            0.0
        } else {
            q.powi(self.degree)
        }
    }

    pub fn gradient(&self, x: &Vector2<f64>) -> Vector2<f64> {
        let r2 = self.radius * self.radius;
        let q = 1.0 - (x - self.c()).norm_squared() / r2;
        if q <= 0.0 {
            Vector2::zeros()
        } else {
            (x - self.c()) * (-2.0 * self.degree as f64 * q.powi(self.degree - 1) / r2)
        }
    }

    /// Euclidean gap between the support and the boundary, from boundary samples.
    pub fn clearance(&self, curve: &BoundaryCurve) -> f64 {
        let n = 4096;
        (0..n)
            .map(|k| (curve.point(TAU * k as f64 / n as f64) - self.c()).norm())
            .fold(f64::INFINITY, f64::min)
            - self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
    pub details: BTreeMap<String, f64>,
}

impl ReportEntry {
    fn new(name: &str, max_error: f64, tolerance: f64, samples: usize) -> Self {
        ReportEntry {
            name: name.into(),
            max_error,
            tolerance,
            samples,
            pass: max_error <= tolerance,
            details: BTreeMap::new(),
        }
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub entries: Vec<ReportEntry>,
}

impl VerificationReport {
    pub fn new(entries: Vec<ReportEntry>) -> Self {
        VerificationReport {
            pass: entries.iter().all(|e| e.pass),
            entries,
        }
    }

    pub fn entry(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Interior point `s·Y(θ)` with `s ≤ 1 − margin`, area-weighted in `s`.
pub fn random_interior<R: Rng>(curve: &BoundaryCurve, rng: &mut R, margin: f64) -> Vector2<f64> {
    let theta = rng.random_range(0.0..TAU);
    let s = rng.random::<f64>().sqrt() * (1.0 - margin);
    curve.radial_point(theta, s)
}

/// Twelve bumps on an interior lattice with radii from 0.1 to 0.4 of the inradius.
pub fn bump_battery(curve: &BoundaryCurve) -> Vec<TestFunction> {
    let n = 4096;
    let inr = (0..n)
        .map(|k| curve.point(TAU * k as f64 / n as f64).norm())
        .fold(f64::INFINITY, f64::min);
    let mut out = Vec::with_capacity(12);
    for k in 0..12 {
        let (i, j) = (k % 4, k / 4);
        let c = Vector2::new((i as f64 - 1.5) * 0.3, (j as f64 - 1.0) * 0.3) * inr;
        let mut b = TestFunction::new(c, inr * (0.1 + 0.3 * k as f64 / 11.0));
        let gap = b.clearance(curve);
        if gap < 0.02 * inr {
            b.radius = 0.9 * (b.radius + gap);
        }
        out.push(b);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    /// `|∫ v⟨Dρ(Du), Dφ⟩ − ∫ fφ| / |∫ fφ|` per bump (absolute when `∫ fφ = 0`).
    pub relative: Vec<f64>,
    pub max_relative: f64,
    /// Quadrature weight dropped where `Du` does not exist.
    pub excluded_measure: f64,
    pub points: usize,
}

/// Tensor 2×2 Gauss quadrature on `cells × cells` squares covering each bump.
pub fn weak_residual(
    solver: &Solver,
    v: &dyn Field,
    u: &dyn Field,
    bumps: &[TestFunction],
    cells: usize,
) -> Result<WeakResidual> {
    let geom = solver.geometry();
    let f = solver.source();
    let gauge = geom.gauge();
    let g = 0.5 / 3f64.sqrt();
    let mut relative = Vec::with_capacity(bumps.len());
    let mut excluded = 0.0;
    let mut points = 0;
    for b in bumps {
        if b.clearance(geom.curve()) <= 0.0 {
            return Err(Error::Precondition(format!(
                "test function at ({}, {}) with radius {} meets the boundary",
                b.center[0], b.center[1], b.radius
            )));
        }
        let h = 2.0 * b.radius / cells as f64;
        let x0 = b.c() - Vector2::new(b.radius, b.radius);
        let mut nodes = Vec::new();
        for a in 0..cells {
            for c in 0..cells {
                for (ox, oy) in [(0.5 - g, 0.5 - g), (0.5 - g, 0.5 + g), (0.5 + g, 0.5 - g), (0.5 + g, 0.5 + g)] {
                    let x = x0 + Vector2::new((a as f64 + ox) * h, (c as f64 + oy) * h);
                    if (x - b.c()).norm() < b.radius {
                        nodes.push(x);
                    }
                }
            }
        }
        let w = h * h / 4.0;
        let terms: Vec<(f64, f64, f64)> = nodes
            .par_iter()
            .map(|x| {
                let rhs = f.eval(x) * b.value(x);
                match u.gradient(x)? {
                    Some(du) => {
                        let flux = v.value(x)? * gauge.grad(&du)?.dot(&b.gradient(x));
                        Ok((flux, rhs, 0.0))
                    }
                    None => Ok((0.0, rhs, w)),
                }
            })
            .collect::<Result<_>>()?;
        let lhs: f64 = terms.iter().map(|t| t.0).sum::<f64>() * w;
        let rhs: f64 = terms.iter().map(|t| t.1).sum::<f64>() * w;
        excluded += terms.iter().map(|t| t.2).sum::<f64>();
        points += nodes.len();
        let defect = (lhs - rhs).abs();
        relative.push(if rhs.abs() > 0.0 { defect / rhs.abs() } else { defect });
    }
    Ok(WeakResidual {
        max_relative: relative.iter().copied().fold(0.0, f64::max),
        relative,
        excluded_measure: excluded,
        points,
    })
}

/// Quadrature over the domain through the star-shaped map `(θ, s) ↦ s·Y(θ)`: trapezoid in `θ`,
/// Gauss–Legendre in `s`.
#[derive(Debug, Clone)]
pub struct DomainQuadrature {
    pub nodes: Vec<Vector2<f64>>,
    pub weights: Vec<f64>,
}

impl DomainQuadrature {
    pub fn new(curve: &BoundaryCurve, n_theta: usize, n_s: usize) -> Self {
        let (gx, gw) = gauss_legendre(n_s);
        let dt = TAU / n_theta as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_s);
        let mut weights = Vec::with_capacity(n_theta * n_s);
        for k in 0..n_theta {
            let j = curve.jet(dt * k as f64);
            let jac = j.y.x * j.dy.y - j.y.y * j.dy.x;
            for (x, w) in gx.iter().zip(&gw) {
                let s = 0.5 * (x + 1.0);
                nodes.push(j.y * s);
                weights.push(dt * 0.5 * w * s * jac);
            }
        }
        DomainQuadrature { nodes, weights }
    }

    pub fn integrate<F: Fn(&Vector2<f64>) -> f64 + Sync>(&self, f: F) -> f64 {
        let vals: Vec<f64> = self.nodes.par_iter().map(&f).collect();
        vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// `Φ(w, z) = −∫ f w + ∫ z (ρ(Dw) − 1)`.
pub fn phi_value(
    geom: &Geometry,
    f: &SourceTerm,
    w: &dyn Field,
    z: &dyn Field,
    quad: &DomainQuadrature,
) -> Result<f64> {
    let terms: Vec<f64> = quad
        .nodes
        .par_iter()
        .map(|x| {
            let zv = z.value(x)?;
            if zv < 0.0 {
                return Err(Error::Precondition(format!("multiplier is negative at ({}, {})", x.x, x.y)));
            }
            let mut t = -f.eval(x) * w.value(x)?;
            if zv != 0.0 {
                if let Some(dw) = w.gradient(x)? {
                    t += zv * (geom.gauge().eval(&dw) - 1.0);
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().zip(&quad.weights).map(|(t, w)| t * w).sum())
}

/// Competitor value and gradient at a quadrature sample.
type Competitor<'a> = dyn Fn(&PhiSample) -> (f64, Option<Vector2<f64>>) + 'a;

struct PhiSample {
    weight: f64,
    x: Vector2<f64>,
    f: f64,
    u: f64,
    du: Option<Vector2<f64>>,
    v: f64,
}

fn random_bump<R: Rng>(curve: &BoundaryCurve, rng: &mut R, inr: f64) -> TestFunction {
    loop {
        let c = random_interior(curve, rng, 0.3);
        let b = TestFunction::new(c, inr * rng.random_range(0.1..0.3));
        if b.clearance(curve) > 0.01 * inr {
            return b;
        }
    }
}

/// `Φ(u, z) ≤ Φ(u, v) + ε ≤ Φ(w, v) + 2ε` for random multipliers `z ≥ 0` and competitors `w`.
pub fn saddle_check<R: Rng>(
    solver: &Solver,
    u: &dyn Field,
    v: &dyn Field,
    quad: &DomainQuadrature,
    n_perturbations: usize,
    eps: f64,
    rng: &mut R,
) -> Result<ReportEntry> {
    let geom = solver.geometry();
    let gauge = geom.gauge();
    let samples: Vec<PhiSample> = quad
        .nodes
        .par_iter()
        .zip(&quad.weights)
        .map(|(x, w)| {
            Ok(PhiSample {
                weight: *w,
                x: *x,
                f: solver.source().eval(x),
                u: u.value(x)?,
                du: u.gradient(x)?,
                v: v.value(x)?,
            })
        })
        .collect::<Result<_>>()?;
    let phi = |wv: &Competitor, z: &dyn Fn(&PhiSample) -> f64| {
        samples
            .iter()
            .map(|s| {
                let (w, dw) = wv(s);
                let c = dw.map_or(0.0, |g| z(s) * (gauge.eval(&g) - 1.0));
                s.weight * (-s.f * w + c)
            })
            .sum::<f64>()
    };
    let base = phi(&|s| (s.u, s.du), &|s| s.v);
    let inr = bump_battery(geom.curve())
        .iter()
        .map(|b| b.radius / (0.1 + 0.3 * 11.0 / 11.0))
        .fold(0.0, f64::max);
    let mut max_z_gap = f64::NEG_INFINITY;
    let mut min_w_gap = f64::INFINITY;
    for k in 0..n_perturbations {
        let b = random_bump(geom.curve(), rng, inr);
        let a = rng.random_range(0.1..1.0);
        let z_val = if k % 2 == 0 {
            phi(&|s| (s.u, s.du), &|s| s.v + a * b.value(&s.x))
        } else {
            let b2 = random_bump(geom.curve(), rng, inr);
            let a2 = rng.random_range(0.1..1.0);
            phi(&|s| (s.u, s.du), &|s| a * b.value(&s.x) + a2 * b2.value(&s.x))
        };
        max_z_gap = max_z_gap.max(z_val - base);
        let b = random_bump(geom.curve(), rng, inr);
        let mag = rng.random_range(0.05..0.25);
        let a = if rng.random::<bool>() { mag } else { -mag };
        let w_val = phi(
            &|s| (s.u + a * b.value(&s.x), s.du.map(|g| g + b.gradient(&s.x) * a)),
            &|s| s.v,
        );
        min_w_gap = min_w_gap.min(w_val - base);
    }
    let violation = max_z_gap.max(-min_w_gap).max(0.0);
    Ok(ReportEntry::new("saddle", violation, eps, 2 * n_perturbations)
        .detail("phi_uv", base)
        .detail("max_phi_uz_minus_phi_uv", max_z_gap)
        .detail("min_phi_wv_minus_phi_uv", min_w_gap))
}

/// `w(x) − w(y) ≤ ρ⁰(x − y)` on random and radial segments, and `w = 0` on the boundary.
pub fn lip1_check<R: Rng>(geom: &Geometry, w: &dyn Field, n_pairs: usize, rng: &mut R) -> Result<ReportEntry> {
    let curve = geom.curve();
    let polar = geom.polar();
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs / 2 {
        let x = random_interior(curve, rng, 0.0);
        let y = random_interior(curve, rng, 0.0);
        if (0..=16).all(|k| {
            let p = x + (y - x) * (k as f64 / 16.0);
            curve.contains(&p)
        }) {
            pairs.push((x, y));
        }
    }
    let radial: Vec<(f64, f64, f64)> = (pairs.len()..n_pairs)
        .map(|_| (rng.random_range(0.0..TAU), rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let radial_pairs: Vec<(Vector2<f64>, Vector2<f64>)> = radial
        .par_iter()
        .map(|(theta, a, b)| {
            let f = cut_time(geom, *theta, 1e-6)?;
            let (s, t) = (a.min(*b) * f.tau * 0.95, a.max(*b) * f.tau * 0.95);
            Ok((f.ray_point(t), f.ray_point(s)))
        })
        .collect::<Result<_>>()?;
    pairs.extend(radial_pairs);
    let violations: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| {
            let (wx, wy) = (w.value(x)?, w.value(y)?);
            Ok((wx - wy - polar.eval(&(x - y))).max(wy - wx - polar.eval(&(y - x))))
        })
        .collect::<Result<_>>()?;
    let boundary: Vec<f64> = (0..64)
        .into_par_iter()
        .map(|k| w.value(&curve.point(TAU * (k as f64 + 0.5) / 64.0)).map(f64::abs))
        .collect::<Result<_>>()?;
    let max_violation = violations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_boundary = boundary.iter().copied().fold(0.0, f64::max);
    Ok(ReportEntry::new("lip1", max_violation.max(max_boundary).max(0.0), 1e-9, pairs.len() + 64)
        .detail("max_pair_violation", max_violation)
        .detail("max_boundary_value", max_boundary))
}

/// `0 ≤ M_{x₀}(s, t) ≤ 1 + T·K̃₋` at random `0 ≤ s ≤ t < τ(x₀)`.
pub fn m_bound_check<R: Rng>(table: &CutTable, n_samples: usize, rng: &mut R) -> Result<ReportEntry> {
    let st = table.stats();
    let bound = 1.0 + st.tau_max * st.kappa_tilde_neg;
    let draws: Vec<(f64, f64, f64)> = (0..n_samples)
        .map(|_| (rng.random_range(0.0..TAU), rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let ms: Vec<f64> = draws
        .par_iter()
        .map(|(theta, a, b)| {
            let f = table.frame(*theta)?;
            let t = a.max(*b) * f.tau * (1.0 - 1e-9);
            let s = a.min(*b) * f.tau * (1.0 - 1e-9);
            f.m_factor(0.0, s, t)
        })
        .collect::<Result<_>>()?;
    let max_m = ms.iter().copied().fold(0.0, f64::max);
    let min_m = ms.iter().copied().fold(f64::INFINITY, f64::min);
    let err = (max_m - bound).max(-min_m).max(0.0);
    Ok(ReportEntry::new("m_bound", err, 1e-12, n_samples)
        .detail("T", st.tau_max)
        .detail("K_minus", st.kappa_tilde_neg)
        .detail("bound", bound)
        .detail("max_m", max_m)
        .detail("min_m", min_m))
}

/// `|ρ(D_h d) − 1|` with central differences at random points whose stencil stays on one smooth
/// branch of `d`.
pub fn eikonal_check<R: Rng>(geom: &Geometry, n_points: usize, step: f64, tol: f64, rng: &mut R) -> Result<ReportEntry> {
    let mut out = Vec::with_capacity(n_points);
    let mut rejected = 0usize;
    while out.len() < n_points {
        let cands: Vec<Vector2<f64>> = (0..n_points - out.len())
            .map(|_| random_interior(geom.curve(), rng, 0.0))
            .collect();
        let res: Vec<Option<f64>> = cands
            .par_iter()
            .map(|x| {
                let p = geom.project(x)?;
                if p.singular || p.distance < 100.0 * step {
                    return Ok(None);
                }
                let theta = p.foot().theta;
                let mut vals = [0.0; 4];
                for (k, o) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)].iter().enumerate() {
                    let q = geom.project(&(x + Vector2::new(o.0, o.1)))?;
                    if q.singular || angle_dist(q.foot().theta, theta) > 1e-2 {
                        return Ok(None);
                    }
                    vals[k] = q.distance;
                }
                let g = Vector2::new(vals[0] - vals[1], vals[2] - vals[3]) / (2.0 * step);
                Ok(Some((geom.gauge().eval(&g) - 1.0).abs()))
            })
            .collect::<Result<_>>()?;
        for r in res {
            match r {
                Some(e) => out.push(e),
                None => rejected += 1,
            }
        }
    }
    let max = out.iter().copied().fold(0.0, f64::max);
    Ok(ReportEntry::new("eikonal", max, tol, out.len()).detail("rejected_candidates", rejected as f64))
}

/// `v(z₀) − v(z₀ + θp)·M_{z₀}(θ) = ∫₀^θ f(z₀ + tp) M_{z₀}(t) dt` at random `(z₀, θ)`.
pub fn representation_check<R: Rng>(solver: &Solver, n: usize, tol: f64, rng: &mut R) -> Result<ReportEntry> {
    let draws: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..TAU), rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let errs: Vec<f64> = draws
        .par_iter()
        .map(|(theta, a, b)| {
            let frame = solver.table().frame(*theta)?;
            let d0 = a * 0.8 * frame.tau;
            let span = b * 0.95 * (frame.tau - d0);
            let z0 = frame.ray_point(d0);
            let z1 = frame.ray_point(d0 + span);
            let v0 = solver.evaluate(&z0)?.v;
            let v1 = solver.evaluate(&z1)?.v;
            let m = frame.m_factor(d0, 0.0, span)?;
            let mut failed = None;
            let q = integrate(
                |t| match frame.m_factor(d0, 0.0, t) {
                    Ok(m) => solver.source().eval(&frame.ray_point(d0 + t)) * m,
                    Err(e) => {
                        failed = Some(e);
                        0.0
                    }
                },
                0.0,
                span,
                1e-11,
            )?;
            if let Some(e) = failed {
                return Err(e);
            }
            Ok((v0 - v1 * m - q.value).abs())
        })
        .collect::<Result<_>>()?;
    let max = errs.iter().copied().fold(0.0, f64::max);
    Ok(ReportEntry::new("representation", max, tol, n))
}

/// `d/dt v(Ψ(θ,t)) = trace W̄(t)·v − f` by central differences along random rays.
pub fn ode_check<R: Rng>(solver: &Solver, n_rays: usize, tol: f64, rng: &mut R) -> Result<ReportEntry> {
    let draws: Vec<f64> = (0..n_rays).map(|_| rng.random_range(0.0..TAU)).collect();
    let errs: Vec<f64> = draws
        .par_iter()
        .map(|theta| {
            let frame = solver.table().frame(*theta)?;
            let h = 1e-4 * frame.tau;
            let mut worst: f64 = 0.0;
            for frac in [0.15, 0.3, 0.5, 0.7, 0.85] {
                let t = frac * frame.tau;
                let v = |s: f64| solver.evaluate(&frame.ray_point(s)).map(|p| p.v);
                let dv = (v(t + h)? - v(t - h)?) / (2.0 * h);
                let vt = v(t)?;
                let tr = frame.weingarten_along_ray(t)?.w.trace();
                let f = solver.source().eval(&frame.ray_point(t));
                let rhs = tr * vt - f;
                let scale = f.abs() + (tr * vt).abs() + 1e-12;
                worst = worst.max((dv - rhs).abs() / scale);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let max = errs.iter().copied().fold(0.0, f64::max);
    Ok(ReportEntry::new("ode", max, tol, 5 * n_rays))
}

/// `v` rebuilt by integrating the ray equation backward from `v = 0` at the cut point, compared
/// with the quadrature value of `v_f`.
pub fn uniqueness_check<R: Rng>(solver: &Solver, n: usize, tol: f64, rng: &mut R) -> Result<ReportEntry> {
    let draws: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.0..TAU), rng.random::<f64>())).collect();
    let errs: Vec<f64> = draws
        .par_iter()
        .map(|(theta, a)| {
            let frame = solver.table().frame(*theta)?;
            let t0 = a * 0.9 * frame.tau;
            let f = |t: f64| solver.source().eval(&frame.ray_point(t));
            let focal = 1.0 - frame.tau * frame.kappa_tilde < 1e-6;
            let rebuilt = if focal {
                // Jacobian-weighted form y = det(I − tW)·v stays regular at a focal cut
                let y = rk45(|t, _| -frame.jacobian(t) * f(t), frame.tau, 0.0, t0, 1e-12, 1e-14)?;
                y / frame.jacobian(t0)
            } else {
                rk45(
                    |t, v| {
                        let tr = frame
                            .weingarten_along_ray(t.min(frame.tau))
                            .map(|w| w.w.trace())
                            .unwrap_or(f64::NAN);
                        tr * v - f(t)
                    },
                    frame.tau,
                    0.0,
                    t0,
                    1e-12,
                    1e-14,
                )?
            };
            let direct = solver.evaluate(&frame.ray_point(t0))?.v;
            Ok((rebuilt - direct).abs())
        })
        .collect::<Result<_>>()?;
    let max = errs.iter().copied().fold(0.0, f64::max);
    Ok(ReportEntry::new("uniqueness", max, tol, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryOptions {
    pub seed: u64,
    pub perturb_v: f64,
    pub weak_cells: usize,
    pub weak_tol: f64,
    pub eikonal_points: usize,
    pub eikonal_step: f64,
    pub eikonal_tol: f64,
    pub representation_samples: usize,
    pub representation_tol: f64,
    pub ode_rays: usize,
    pub ode_tol: f64,
    pub uniqueness_samples: usize,
    pub uniqueness_tol: f64,
    pub saddle_perturbations: usize,
    pub saddle_eps: f64,
    pub phi_n_theta: usize,
    pub phi_n_s: usize,
    pub lip1_pairs: usize,
    pub m_bound_samples: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            seed: 0,
            perturb_v: 1.0,
            weak_cells: 16,
            weak_tol: 1e-3,
            eikonal_points: 500,
            eikonal_step: 1e-5,
            eikonal_tol: 1e-3,
            representation_samples: 100,
            representation_tol: 1e-7,
            ode_rays: 20,
            ode_tol: 1e-3,
            uniqueness_samples: 200,
            uniqueness_tol: 1e-6,
            saddle_perturbations: 50,
            saddle_eps: 1e-6,
            phi_n_theta: 256,
            phi_n_s: 32,
            lip1_pairs: 200,
            m_bound_samples: 10_000,
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// The full battery on `(d_Ω, perturb_v · v_f)`.
pub fn run_battery(solver: &Solver, opts: &BatteryOptions) -> Result<VerificationReport> {
    let geom = solver.geometry();
    let u = DistanceField(geom);
    let v = DensityField {
        solver,
        scale: opts.perturb_v,
    };
    let bumps = bump_battery(geom.curve());
    let coarse = weak_residual(solver, &v, &u, &bumps, opts.weak_cells)?;
    let fine = weak_residual(solver, &v, &u, &bumps, 2 * opts.weak_cells)?;
    let weak = ReportEntry::new("weak_form", fine.max_relative, opts.weak_tol, bumps.len())
        .detail("coarse_max_relative", coarse.max_relative)
        .detail("refinement_ratio", coarse.max_relative / fine.max_relative)
        .detail("excluded_measure", fine.excluded_measure)
        .detail("quadrature_points", fine.points as f64);
    let quad = DomainQuadrature::new(geom.curve(), opts.phi_n_theta, opts.phi_n_s);
    let entries = vec![
        weak,
        eikonal_check(geom, opts.eikonal_points, opts.eikonal_step, opts.eikonal_tol, &mut stream_rng(opts.seed, 1))?,
        representation_check(solver, opts.representation_samples, opts.representation_tol, &mut stream_rng(opts.seed, 2))?,
        ode_check(solver, opts.ode_rays, opts.ode_tol, &mut stream_rng(opts.seed, 3))?,
        uniqueness_check(solver, opts.uniqueness_samples, opts.uniqueness_tol, &mut stream_rng(opts.seed, 4))?,
        saddle_check(solver, &u, &v, &quad, opts.saddle_perturbations, opts.saddle_eps, &mut stream_rng(opts.seed, 5))?,
        m_bound_check(solver.table(), opts.m_bound_samples, &mut stream_rng(opts.seed, 6))?,
        lip1_check(geom, &u, opts.lip1_pairs, &mut stream_rng(opts.seed, 7))?,
    ];
    Ok(VerificationReport::new(entries))
}
