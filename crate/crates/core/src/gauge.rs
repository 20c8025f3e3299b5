//! Smooth convex gauges, their polars, and the quantitative constants attached to them.
//!
//! A gauge `ρ` is the Minkowski functional of a convex body `K` containing the origin in its
//! interior. All gauges here are assumed to be of class C²₊: `ρ` is C² away from the origin
//! and the Hessian `D²ρ(ν)` is positive definite on `ν⊥` for every unit `ν`. Distances in the
//! rest of the crate are measured with the polar gauge `ρ⁰` (the support function of `K`).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, tangent_basis, tangential_eigenvalues};

pub type Vector<const D: usize> = SVector<f64, D>;
pub type Matrix<const D: usize> = SMatrix<f64, D, D>;

/// Below this Euclidean norm a vector is treated as the origin.
pub const ORIGIN_GUARD: f64 = 1e-13;
/// Minimum admissible curvature radius of the polar body.
pub const C2PLUS_THRESHOLD: f64 = 1e-8;
const ADMISSION_SAMPLES: usize = 512;

/// Analytic evaluator bundle for a user-supplied gauge.
///
/// Implementations must be positively 1-homogeneous and convex, with exact first and second
/// derivatives away from the origin.
pub trait GaugeFunction<const D: usize>: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn value(&self, xi: &Vector<D>) -> f64;
    fn gradient(&self, xi: &Vector<D>) -> Vector<D>;
    fn hessian(&self, xi: &Vector<D>) -> Matrix<D>;

    /// Value, gradient and Hessian together; override when they share work.
    fn jet(&self, xi: &Vector<D>) -> (f64, Vector<D>, Matrix<D>) {
        (self.value(xi), self.gradient(xi), self.hessian(xi))
    }
}

#[derive(Clone, Debug)]
pub enum GaugeFamily<const D: usize> {
    Euclidean,
    /// `ρ(ξ) = √(ξᵀQξ)` with `Q` symmetric positive definite.
    Ellipsoidal { q: Matrix<D>, q_inv: Matrix<D> },
    Custom(Arc<dyn GaugeFunction<D>>),
}

#[derive(Clone, Debug)]
pub struct Gauge<const D: usize> {
    family: GaugeFamily<D>,
}

pub type Gauge2 = Gauge<2>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub r0: f64,
    #[serde(rename = "R0")]
    pub big_r0: f64,
}

fn origin_error() -> Error {
    Error::Domain("gauge not differentiable at origin".into())
}

impl<const D: usize> Gauge<D> {
    pub fn euclidean() -> Self {
        Gauge {
            family: GaugeFamily::Euclidean,
        }
    }

    pub fn ellipsoidal(q: Matrix<D>) -> Result<Self> {
        if (q - q.transpose()).abs().max() > 1e-12 * (1.0 + q.abs().max()) {
            return Err(Error::InvalidGauge("Q must be symmetric".into()));
        }
        let ev = sym_eigenvalues(&q);
        if ev[0] <= 0.0 || !ev[0].is_finite() {
            return Err(Error::InvalidGauge(format!(
                "Q must be positive definite (smallest eigenvalue {:e})",
                ev[0]
            )));
        }
        let q_inv = q
            .try_inverse()
            .ok_or_else(|| Error::InvalidGauge("Q is singular".into()))?;
        let q_inv = 0.5 * (q_inv + q_inv.transpose());
        Ok(Gauge {
            family: GaugeFamily::Ellipsoidal { q, q_inv },
        })
    }

    /// Wraps an analytic evaluator after checking the C²₊ admission condition on sampled
    /// sphere directions.
    pub fn custom(f: Arc<dyn GaugeFunction<D>>) -> Result<Self> {
        let g = Gauge {
            family: GaugeFamily::Custom(f),
        };
        g.admit()?;
        Ok(g)
    }

    fn admit(&self) -> Result<()> {
        let mut worst = f64::INFINITY;
        for nu in sphere_samples::<D>(ADMISSION_SAMPLES) {
            let v = self.eval(&nu);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGauge(format!(
                    "gauge is not positive on the unit sphere (value {v} at {:?})",
                    nu.as_slice()
                )));
            }
            let h = self.hess(&nu)?;
            let ev = tangential_eigenvalues(&h, &nu);
            worst = worst.min(ev[0]);
        }
        if worst < C2PLUS_THRESHOLD {
            return Err(Error::InvalidGauge(format!(
                "not of class C2+: smallest tangential Hessian eigenvalue {worst:e}"
            )));
        }
        Ok(())
    }

    pub fn family(&self) -> &GaugeFamily<D> {
        &self.family
    }

    pub fn describe(&self) -> String {
        match &self.family {
            GaugeFamily::Euclidean => "euclidean".into(),
            GaugeFamily::Ellipsoidal { .. } => "ellipsoidal".into(),
            GaugeFamily::Custom(f) => format!("custom:{}", f.name()),
        }
    }

    pub fn eval(&self, xi: &Vector<D>) -> f64 {
        match &self.family {
            GaugeFamily::Euclidean => xi.norm(),
            GaugeFamily::Ellipsoidal { q, .. } => xi.dot(&(q * xi)).max(0.0).sqrt(),
            GaugeFamily::Custom(f) => {
                // evaluated on the unit sphere, so tiny arguments stay away from the origin guard
                let n = xi.norm();
                if n == 0.0 {
                    0.0
                } else {
                    n * f.value(&(xi / n))
                }
            }
        }
    }

    pub fn grad(&self, xi: &Vector<D>) -> Result<Vector<D>> {
        let n = xi.norm();
        if n < ORIGIN_GUARD {
            return Err(origin_error());
        }
        Ok(match &self.family {
            GaugeFamily::Euclidean => xi / n,
            GaugeFamily::Ellipsoidal { q, .. } => {
                let qx = q * xi;
                qx / xi.dot(&qx).sqrt()
            }
            GaugeFamily::Custom(f) => f.gradient(xi),
        })
    }

    pub fn hess(&self, xi: &Vector<D>) -> Result<Matrix<D>> {
        let n = xi.norm();
        if n < ORIGIN_GUARD {
            return Err(origin_error());
        }
        Ok(match &self.family {
            GaugeFamily::Euclidean => {
                let u = xi / n;
                (Matrix::<D>::identity() - u * u.transpose()) / n
            }
            GaugeFamily::Ellipsoidal { q, .. } => {
                let qx = q * xi;
                let r2 = xi.dot(&qx);
                let r = r2.sqrt();
                (q - qx * qx.transpose() / r2) / r
            }
            GaugeFamily::Custom(f) => f.hessian(xi),
        })
    }

    /// `(ρ, Dρ, D²ρ)` at `ξ ≠ 0`.
    pub fn jet(&self, xi: &Vector<D>) -> Result<(f64, Vector<D>, Matrix<D>)> {
        match &self.family {
            GaugeFamily::Custom(f) => {
                if xi.norm() < ORIGIN_GUARD {
                    return Err(origin_error());
                }
                Ok(f.jet(xi))
            }
            _ => Ok((self.eval(xi), self.grad(xi)?, self.hess(xi)?)),
        }
    }

    /// The polar gauge `ρ⁰(η) = max{⟨η,p⟩ : ρ(p) ≤ 1}`.
    pub fn polar(&self) -> Result<Gauge<D>> {
        Ok(match &self.family {
            GaugeFamily::Euclidean => Gauge::euclidean(),
            GaugeFamily::Ellipsoidal { q, q_inv } => Gauge {
                family: GaugeFamily::Ellipsoidal { q: *q_inv, q_inv: *q },
            },
            GaugeFamily::Custom(_) => Gauge {
                family: GaugeFamily::Custom(Arc::new(PolarGauge::new(self.clone()))),
            },
        })
    }

    /// `Dγ(ξ)` for the squared gauge `γ = ρ²/2`; zero at the origin.
    pub fn gamma_grad(&self, xi: &Vector<D>) -> Vector<D> {
        match self.grad(xi) {
            Ok(g) => g * self.eval(xi),
            Err(_) => Vector::<D>::zeros(),
        }
    }

    /// `D²γ(ξ) = ρ(ξ) D²ρ(ξ) + Dρ(ξ) ⊗ Dρ(ξ)`.
    pub fn gamma_hess(&self, xi: &Vector<D>) -> Result<Matrix<D>> {
        let g = self.grad(xi)?;
        let h = self.hess(xi)?;
        Ok(h * self.eval(xi) + g * g.transpose())
    }

    /// Tight gauge constants from sphere sampling refined by local search.
    pub fn constants(&self, sphere_samples_count: usize) -> Result<GaugeConstants> {
        if sphere_samples_count < 64 {
            return Err(Error::Precondition(
                "constants() needs at least 64 sphere samples".into(),
            ));
        }
        let samples = sphere_samples::<D>(sphere_samples_count);
        let step = sample_spacing::<D>(sphere_samples_count);

        let rho = |u: &Vector<D>| self.eval(u);
        let grad_norm = |u: &Vector<D>| self.grad(u).map(|g| g.norm()).unwrap_or(f64::NAN);
        let hess_norm = |u: &Vector<D>| {
            self.hess(u)
                .map(|h| {
                    let ev = sym_eigenvalues(&h);
                    ev[0].abs().max(ev[D - 1].abs())
                })
                .unwrap_or(f64::NAN)
        };
        let gamma_entry = |u: &Vector<D>| {
            self.gamma_hess(u)
                .map(|h| h.abs().max())
                .unwrap_or(f64::NAN)
        };
        let radius_min = |u: &Vector<D>| {
            self.hess(u)
                .map(|h| tangential_eigenvalues(&h, u)[0])
                .unwrap_or(f64::NAN)
        };
        let radius_max = |u: &Vector<D>| {
            self.hess(u)
                .map(|h| *tangential_eigenvalues(&h, u).last().unwrap())
                .unwrap_or(f64::NAN)
        };

        let c1 = extremize(&samples, step, &rho, false);
        let c2 = extremize(&samples, step, &rho, true);
        let c3 = extremize(&samples, step, &grad_norm, true);
        let c4 = extremize(&samples, step, &hess_norm, true);
        let c5 = extremize(&samples, step, &gamma_entry, true);
        let r0 = extremize(&samples, step, &radius_min, false);
        let big_r0 = extremize(&samples, step, &radius_max, true);

        if !(r0 > 0.0) {
            return Err(Error::InvalidGauge(format!(
                "not of class C2+: minimal curvature radius of the polar body is {r0:e}"
            )));
        }
        let c = 1.0 + r0 * c1 / (2.0 * c3 * c3);
        let c6 = (r0 * c1 / 2.0).min((1.0 - 1.0 / c) * c1 * c1);
        Ok(GaugeConstants {
            c1,
            c2,
            c3,
            c4,
            c5,
            c6,
            r0,
            big_r0,
        })
    }
}

/// Deterministic, roughly uniform directions on the unit sphere of ℝᴰ.
pub fn sphere_samples<const D: usize>(n: usize) -> Vec<Vector<D>> {
    match D {
        1 => vec![Vector::<D>::from_element(1.0), Vector::<D>::from_element(-1.0)],
        2 => (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                Vector::<D>::from_iterator([t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    Vector::<D>::from_iterator([r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            (0..n)
                .map(|_| {
                    Vector::<D>::from_fn(|_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
                        .normalize()
                })
                .collect()
        }
    }
}

fn sample_spacing<const D: usize>(n: usize) -> f64 {
    let dim = (D.max(2) - 1) as f64;
    (4.0 * std::f64::consts::PI / n as f64).powf(1.0 / dim)
}

/// Best sampled value of `f` on the sphere refined by a shrinking pattern search.
fn extremize<const D: usize, F: Fn(&Vector<D>) -> f64>(
    samples: &[Vector<D>],
    step: f64,
    f: &F,
    maximize: bool,
) -> f64 {
    let sign = if maximize { 1.0 } else { -1.0 };
    let score = |u: &Vector<D>| sign * f(u);
    let (mut best_u, mut best) = samples
        .iter()
        .map(|u| (*u, score(u)))
        .filter(|(_, s)| s.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one finite sample");
    let mut h = step;
    while h > 1e-11 {
        let mut improved = false;
        for b in tangent_basis(&best_u) {
            for s in [h, -h] {
                let cand = (best_u + b * s).normalize();
                let v = score(&cand);
                if v > best {
                    best = v;
                    best_u = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    sign * best
}

/// Numerical polar of a gauge given only through its analytic evaluator.
///
/// The maximizer of `⟨η, p⟩` over the unit ρ-sphere is found by Newton ascent on the sphere;
/// maximizers are memoized by quantized direction and reused as warm starts.
pub struct PolarGauge<const D: usize> {
    primal: Gauge<D>,
    cache: RwLock<HashMap<[i64; D], Vector<D>>>,
}

impl<const D: usize> fmt::Debug for PolarGauge<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolarGauge")
            .field("primal", &self.primal.describe())
            .finish()
    }
}

const POLAR_CACHE_RESOLUTION: f64 = 1e-6;
const POLAR_CACHE_LIMIT: usize = 1 << 21;
const POLAR_TOL: f64 = 1e-13;

impl<const D: usize> PolarGauge<D> {
    pub fn new(primal: Gauge<D>) -> Self {
        PolarGauge {
            primal,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn key(dir: &Vector<D>) -> [i64; D] {
        let mut k = [0i64; D];
        for i in 0..D {
            k[i] = (dir[i] / POLAR_CACHE_RESOLUTION).round() as i64;
        }
        k
    }

    fn objective(&self, eta: &Vector<D>, u: &Vector<D>) -> f64 {
        eta.dot(u) / self.primal.eval(u)
    }

    /// Newton ascent of `u ↦ ⟨η,u⟩/ρ(u)` on the unit sphere. Returns the unit maximizer
    /// direction and the number of iterations used.
    fn ascend(&self, eta: &Vector<D>, start: Vector<D>) -> Result<(Vector<D>, usize)> {
        let mut u = start.normalize();
        for it in 0..200 {
            let rho = self.primal.eval(&u);
            let g = self.primal.grad(&u)?;
            let h = self.primal.hess(&u)?;
            let a = eta.dot(&u);
            let grad = eta / rho - g * (a / (rho * rho));
            let hess = -(eta * g.transpose() + g * eta.transpose()) / (rho * rho)
                + g * g.transpose() * (2.0 * a / (rho * rho * rho))
                - h * (a / (rho * rho));
            let basis = tangent_basis(&u);
            let k = basis.len();
            let gt = DVector::from_fn(k, |i, _| basis[i].dot(&grad));
            let ht = DMatrix::from_fn(k, k, |i, j| basis[i].dot(&(hess * basis[j])));
            let scale = eta.norm() / rho;
            if gt.norm() <= 1e-15 * scale.max(1e-300) {
                return Ok((u, it));
            }
            let eig = ht.clone().symmetric_eigenvalues();
            let newton = if eig.iter().all(|&e| e < 0.0) {
                ht.lu().solve(&(-&gt))
            } else {
                None
            };
            let step_t = newton.unwrap_or_else(|| {
                // fall back to a gradient step of bounded length
                let n = gt.norm();
                &gt * (0.25 / n)
            });
            let mut step = Vector::<D>::zeros();
            for i in 0..k {
                step += basis[i] * step_t[i];
            }
            let current = self.objective(eta, &u);
            let mut t = 1.0;
            let mut next = (u + step).normalize();
            while self.objective(eta, &next) < current - 1e-15 * current.abs() && t > 1e-8 {
                t *= 0.5;
                next = (u + step * t).normalize();
            }
            let moved = (next - u).norm();
            u = next;
            if moved < POLAR_TOL {
                return Ok((u, it + 1));
            }
        }
        Err(Error::numeric(
            format!("polar maximization did not converge for direction {:?}", eta.as_slice()),
            (self.primal.grad(&u)?.normalize() - eta.normalize()).norm(),
        ))
    }

    /// Solves `D²ρ(p) H e_j = (I − η⊗p/ρ⁰)e_j / ρ⁰` with `⟨η, H e_j⟩ = 0` column by column.
    fn hessian_at(&self, eta: &Vector<D>, p: &Vector<D>) -> Matrix<D> {
        let nan = Matrix::<D>::from_element(f64::NAN);
        let Ok(hp) = self.primal.hess(p) else {
            return nan;
        };
        let rho0 = eta.dot(p);
        let entry = |i: usize, j: usize| match (i < D, j < D) {
            (true, true) => hp[(i, j)],
            (true, false) => eta[i],
            (false, true) => eta[j],
            (false, false) => 0.0,
        };
        let rhs = |i: usize, j: usize| {
            if i == D {
                0.0
            } else {
                let delta = if i == j { 1.0 } else { 0.0 };
                (delta - eta[i] * p[j] / rho0) / rho0
            }
        };
        let mut out = Matrix::<D>::zeros();
        if D == 2 {
            let lu = SMatrix::<f64, 3, 3>::from_fn(entry).lu();
            for j in 0..D {
                let Some(sol) = lu.solve(&SVector::<f64, 3>::from_fn(|i, _| rhs(i, j))) else {
                    return nan;
                };
                for i in 0..D {
                    out[(i, j)] = sol[i];
                }
            }
        } else {
            let lu = DMatrix::<f64>::from_fn(D + 1, D + 1, entry).lu();
            for j in 0..D {
                let Some(sol) = lu.solve(&DVector::<f64>::from_fn(D + 1, |i, _| rhs(i, j))) else {
                    return nan;
                };
                for i in 0..D {
                    out[(i, j)] = sol[i];
                }
            }
        }
        0.5 * (out + out.transpose())
    }

    /// Planar case: Newton on the angle `φ` for `arg Dρ(u(φ)) = arg η`. The normal angle is
    /// strictly increasing in `φ` for a C²₊ gauge, so the bounded Newton step converges.
    fn ascend_planar(&self, eta: &Vector<D>, start: &Vector<D>) -> Option<Vector<D>> {
        let mut phi = start[1].atan2(start[0]);
        for _ in 0..60 {
            let (s, c) = phi.sin_cos();
            let u = Vector::<D>::from_iterator([c, s]);
            let t = Vector::<D>::from_iterator([-s, c]);
            let g = self.primal.grad(&u).ok()?;
            let ht = self.primal.hess(&u).ok()? * t;
            // signed angle from η to Dρ(u)
            let f = (eta[0] * g[1] - eta[1] * g[0]).atan2(eta.dot(&g));
            let df = (g[0] * ht[1] - g[1] * ht[0]) / g.norm_squared();
            if !(df > 0.0) {
                return None;
            }
            let step = (-f / df).clamp(-1.0, 1.0);
            phi += step;
            // quadratic convergence: the error after this step is O(step²)
            if step.abs() < 1e-12 {
                let (s, c) = phi.sin_cos();
                return Some(Vector::<D>::from_iterator([c, s]));
            }
        }
        None
    }

    /// The unit-ρ maximizer `p(η)` with `ρ(p) = 1`.
    pub fn maximizer(&self, eta: &Vector<D>) -> Result<Vector<D>> {
        let n = eta.norm();
        if n < ORIGIN_GUARD {
            return Err(origin_error());
        }
        let dir = eta / n;
        let key = Self::key(&dir);
        let cached = self.cache.read().ok().and_then(|c| c.get(&key).copied());
        let planar = if D == 2 {
            self.ascend_planar(&dir, cached.as_ref().unwrap_or(&dir))
        } else {
            None
        };
        let u = match (planar, cached) {
            (Some(u), _) => u,
            (None, Some(start)) => self.ascend(&dir, start)?.0,
            (None, None) => {
                let mut starts = vec![dir];
                for i in 0..D {
                    for s in [1.0, -1.0] {
                        let mut e = Vector::<D>::zeros();
                        e[i] = s;
                        if e.dot(&dir) > 0.0 {
                            starts.push(e);
                        }
                    }
                }
                starts.sort_by(|a, b| {
                    self.objective(&dir, b)
                        .total_cmp(&self.objective(&dir, a))
                });
                let mut best: Option<(Vector<D>, f64)> = None;
                let mut last_err = None;
                for s in starts.iter().take(2) {
                    match self.ascend(&dir, *s) {
                        Ok((u, _)) => {
                            let v = self.objective(&dir, &u);
                            if best.is_none_or(|(_, b)| v > b) {
                                best = Some((u, v));
                            }
                        }
                        Err(e) => last_err = Some(e),
                    }
                }
                match (best, last_err) {
                    (Some((u, _)), _) => u,
                    (None, Some(e)) => return Err(e),
                    (None, None) => unreachable!(),
                }
            }
        };
        if let Ok(mut c) = self.cache.write() {
            if c.len() > POLAR_CACHE_LIMIT {
                c.clear();
            }
            c.insert(key, u);
        }
        Ok(u / self.primal.eval(&u))
    }
}

impl<const D: usize> GaugeFunction<D> for PolarGauge<D> {
    fn name(&self) -> String {
        format!("polar({})", self.primal.describe())
    }

    fn value(&self, eta: &Vector<D>) -> f64 {
        match self.maximizer(eta) {
            Ok(p) => eta.dot(&p),
            Err(_) => f64::NAN,
        }
    }

    fn gradient(&self, eta: &Vector<D>) -> Vector<D> {
        self.maximizer(eta)
            .unwrap_or_else(|_| Vector::<D>::from_element(f64::NAN))
    }

    fn hessian(&self, eta: &Vector<D>) -> Matrix<D> {
        match self.maximizer(eta) {
            Ok(p) => self.hessian_at(eta, &p),
            Err(_) => Matrix::<D>::from_element(f64::NAN),
        }
    }

    fn jet(&self, eta: &Vector<D>) -> (f64, Vector<D>, Matrix<D>) {
        match self.maximizer(eta) {
            Ok(p) => (eta.dot(&p), p, self.hessian_at(eta, &p)),
            Err(_) => (f64::NAN, Vector::<D>::from_element(f64::NAN), Matrix::<D>::from_element(f64::NAN)),
        }
    }
}

/// Asymmetric Randers-type gauge `ρ(ξ) = √(ξᵀQξ) + ⟨b, ξ⟩`, with `bᵀQ⁻¹b < 1`.
#[derive(Debug, Clone)]
pub struct Randers<const D: usize> {
    q: Matrix<D>,
    b: Vector<D>,
}

impl<const D: usize> Randers<D> {
    pub fn new(q: Matrix<D>, b: Vector<D>) -> Result<Self> {
        let ell = Gauge::ellipsoidal(q)?;
        let GaugeFamily::Ellipsoidal { q_inv, .. } = ell.family else {
            unreachable!()
        };
        let drift = b.dot(&(q_inv * b));
        if drift >= 1.0 {
            return Err(Error::InvalidGauge(format!(
                "randers drift bᵀQ⁻¹b = {drift} must be < 1"
            )));
        }
        Ok(Randers { q, b })
    }
}

impl<const D: usize> GaugeFunction<D> for Randers<D> {
    fn name(&self) -> String {
        "randers".into()
    }
    fn value(&self, xi: &Vector<D>) -> f64 {
        xi.dot(&(self.q * xi)).sqrt() + self.b.dot(xi)
    }
    fn gradient(&self, xi: &Vector<D>) -> Vector<D> {
        let qx = self.q * xi;
        qx / xi.dot(&qx).sqrt() + self.b
    }
    fn hessian(&self, xi: &Vector<D>) -> Matrix<D> {
        let qx = self.q * xi;
        let r2 = xi.dot(&qx);
        (self.q - qx * qx.transpose() / r2) / r2.sqrt()
    }
}

/// Symmetric non-quadratic gauge `ρ(ξ) = |ξ| + a·(Σ ξᵢ⁴)^{1/4}`.
#[derive(Debug, Clone)]
pub struct QuarticBlend {
    pub weight: f64,
}

impl<const D: usize> GaugeFunction<D> for QuarticBlend {
    fn name(&self) -> String {
        "quartic_blend".into()
    }
    fn value(&self, xi: &Vector<D>) -> f64 {
        let s: f64 = xi.iter().map(|x| x.powi(4)).sum();
        xi.norm() + self.weight * s.powf(0.25)
    }
    fn gradient(&self, xi: &Vector<D>) -> Vector<D> {
        let s: f64 = xi.iter().map(|x| x.powi(4)).sum();
        let n4 = s.powf(0.25);
        let n3 = n4 * n4 * n4;
        xi / xi.norm() + xi.map(|x| x.powi(3)) * (self.weight / n3)
    }
    fn hessian(&self, xi: &Vector<D>) -> Matrix<D> {
        let s: f64 = xi.iter().map(|x| x.powi(4)).sum();
        let n4 = s.powf(0.25);
        let n3 = n4 * n4 * n4;
        let n7 = n3 * n3 * n4;
        let cube = xi.map(|x| x.powi(3));
        let quartic = Matrix::<D>::from_diagonal(&xi.map(|x| 3.0 * x * x)) / n3
            - cube * cube.transpose() * (3.0 / n7);
        let n = xi.norm();
        let u = xi / n;
        (Matrix::<D>::identity() - u * u.transpose()) / n + quartic * self.weight
    }
}
