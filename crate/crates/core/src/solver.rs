//! The transport density `v_f` by quadrature along rays, and grid evaluation of `(d, v_f)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCurve;
use crate::distance::Geometry;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::transport::{CutTable, RayFrame, DEFAULT_TABLE_SIZE};

pub type SourceFn = Arc<dyn Fn(&Vector2<f64>) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    /// Power of `x`.
    pub i: u32,
    /// Power of `y`.
    pub j: u32,
    pub c: f64,
}

#[derive(Clone)]
pub enum SourceTerm {
    Constant(f64),
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    Gaussian {
        center: Vector2<f64>,
        width: f64,
        amplitude: f64,
    },
    /// `Σ c xⁱ yʲ`.
    Polynomial(Vec<PolyTerm>),
    Custom(SourceFn),
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Constant(c) => write!(f, "Constant({c})"),
            SourceTerm::Gaussian { center, width, amplitude } => write!(
                f,
                "Gaussian(center=({}, {}), width={width}, amplitude={amplitude})",
                center.x, center.y
            ),
            SourceTerm::Polynomial(t) => write!(f, "Polynomial({t:?})"),
            SourceTerm::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl SourceTerm {
    pub fn custom<F: Fn(&Vector2<f64>) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        SourceTerm::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: &Vector2<f64>) -> f64 {
        match self {
            SourceTerm::Constant(c) => *c,
            SourceTerm::Gaussian { center, width, amplitude } => {
                amplitude * (-(x - center).norm_squared() / (2.0 * width * width)).exp()
            }
            SourceTerm::Polynomial(terms) => terms
                .iter()
                .map(|t| t.c * x.x.powi(t.i as i32) * x.y.powi(t.j as i32))
                .sum(),
            SourceTerm::Custom(f) => f(x),
        }
    }

    /// Checks nonnegativity and finiteness on a radial sample of the domain.
    pub fn validate(&self, curve: &BoundaryCurve) -> Result<()> {
        match self {
            SourceTerm::Constant(c) if !(*c >= 0.0 && c.is_finite()) => {
                return Err(Error::Precondition(format!("constant source must be >= 0 (got {c})")));
            }
            SourceTerm::Gaussian { width, amplitude, .. } if !(*width > 0.0 && *amplitude >= 0.0) => {
                return Err(Error::Precondition(
                    "gaussian source needs width > 0 and amplitude >= 0".into(),
                ));
            }
            _ => {}
        }
        for k in 0..256 {
            let theta = std::f64::consts::TAU * k as f64 / 256.0;
            for m in 0..=16 {
                let x = curve.radial_point(theta, m as f64 / 16.0);
                let v = self.eval(&x);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Precondition(format!(
                        "source is negative or not finite at ({:.6}, {:.6}): {v}",
                        x.x, x.y
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sample grid over a bounding box, with cell-center nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGrid<T> {
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    /// Row-major with `x` varying fastest.
    pub values: Vec<T>,
    pub inside: Vec<bool>,
    pub singular: Vec<bool>,
}

impl<T> FieldGrid<T> {
    pub fn dx(&self) -> f64 {
        (self.bbox[1] - self.bbox[0]) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.bbox[3] - self.bbox[2]) / self.ny as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Vector2<f64> {
        Vector2::new(
            self.bbox[0] + (i as f64 + 0.5) * self.dx(),
            self.bbox[2] + (j as f64 + 0.5) * self.dy(),
        )
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, Vector2<f64>)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (self.index(i, j), self.point(i, j))))
    }
}

/// Curve bounding box widened by 2% of its extent.
pub fn auto_bbox(curve: &BoundaryCurve) -> [f64; 4] {
    let b = curve.bbox();
    let (wx, wy) = (0.01 * (b[1] - b[0]), 0.01 * (b[3] - b[2]));
    [b[0] - wx, b[1] + wx, b[2] - wy, b[3] + wy]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub table_size: usize,
    pub cut_tol: f64,
    pub quad_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            table_size: DEFAULT_TABLE_SIZE,
            cut_tol: 1e-9,
            quad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSolution {
    pub distance: f64,
    pub v: f64,
    pub singular: bool,
    pub foot_theta: f64,
}

#[derive(Debug, Clone)]
pub struct Solver {
    table: CutTable,
    source: SourceTerm,
    options: SolverOptions,
}

impl Solver {
    pub fn new(geom: &Geometry, source: SourceTerm, options: SolverOptions) -> Result<Self> {
        if !(options.quad_tol > 0.0 && options.quad_tol <= 1e-3) {
            return Err(Error::Precondition(format!(
                "quadrature tolerance {:e} outside (0, 1e-3]",
                options.quad_tol
            )));
        }
        source.validate(geom.curve())?;
        let table = CutTable::build(geom, options.table_size, options.cut_tol)?;
        Ok(Solver {
            table,
            source,
            options,
        })
    }

    /// Same geometry and cut table with a different source.
    pub fn with_source(&self, source: SourceTerm) -> Result<Self> {
        source.validate(self.geometry().curve())?;
        Ok(Solver {
            table: self.table.clone(),
            source,
            options: self.options,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        self.table.geometry()
    }

    pub fn table(&self) -> &CutTable {
        &self.table
    }

    pub fn source(&self) -> &SourceTerm {
        &self.source
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    /// `∫₀^{τ−depth} f(Ψ(θ, depth + t)) M(t) dt` along a known ray, graded towards the cut.
    pub fn v_on_ray(&self, frame: &RayFrame, depth: f64) -> Result<f64> {
        let span = frame.tau - depth;
        if span <= 0.0 {
            return Ok(0.0);
        }
        let k = frame.kappa_tilde;
        let j0 = 1.0 - depth * k;
        if j0 <= 0.0 {
            return Err(Error::Domain(format!("depth {depth} lies beyond the focal time")));
        }
        let q = integrate(
            |s| {
                let t = span * (1.0 - s * s);
                let m = ((1.0 - (depth + t) * k) / j0).max(0.0);
                self.source.eval(&frame.ray_point(depth + t)) * m * 2.0 * span * s
            },
            0.0,
            1.0,
            self.options.quad_tol,
        )?;
        Ok(q.value.max(0.0))
    }

    pub fn evaluate(&self, x: &Vector2<f64>) -> Result<PointSolution> {
        let p = self.geometry().project(x)?;
        let theta = p.foot().theta;
        if p.singular {
            return Ok(PointSolution {
                distance: p.distance,
                v: 0.0,
                singular: true,
                foot_theta: theta,
            });
        }
        let frame = self.table.frame(theta)?;
        Ok(PointSolution {
            distance: p.distance,
            v: self.v_on_ray(&frame, p.distance)?,
            singular: false,
            foot_theta: theta,
        })
    }

    pub fn v_f_at(&self, x: &Vector2<f64>) -> Result<f64> {
        if !self.geometry().curve().contains(x) {
            return Err(Error::Domain(format!("v_f_at needs an interior point, got ({}, {})", x.x, x.y)));
        }
        Ok(self.evaluate(x)?.v)
    }

    /// `τ(x) = τ(x₀) − d(x)` at regular points.
    pub fn tau_at_point(&self, x: &Vector2<f64>) -> Result<Option<f64>> {
        let p = self.geometry().project(x)?;
        if p.singular {
            return Ok(None);
        }
        Ok(Some((self.table.tau_at(p.foot().theta)? - p.distance).max(0.0)))
    }

    pub fn solve_grid(
        &self,
        nx: usize,
        ny: usize,
        bbox: Option<[f64; 4]>,
    ) -> Result<(FieldGrid<f64>, FieldGrid<f64>)> {
        if nx < 16 || ny < 16 {
            return Err(Error::Precondition(format!("grid must be at least 16x16 (got {nx}x{ny})")));
        }
        let bbox = bbox.unwrap_or_else(|| auto_bbox(self.geometry().curve()));
        let mut d = FieldGrid {
            bbox,
            nx,
            ny,
            values: Vec::new(),
            inside: Vec::new(),
            singular: Vec::new(),
        };
        let pts: Vec<Vector2<f64>> = d.points().map(|(_, p)| p).collect();
        let curve = self.geometry().curve();
        let sols: Vec<Option<PointSolution>> = pts
            .par_iter()
            .map(|x| {
                if curve.contains(x) {
                    self.evaluate(x).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        d.inside = sols.iter().map(Option::is_some).collect();
        d.singular = sols.iter().map(|s| s.is_some_and(|s| s.singular)).collect();
        d.values = sols.iter().map(|s| s.map_or(f64::NAN, |s| s.distance)).collect();
        let mut v = d.clone();
        v.values = sols.iter().map(|s| s.map_or(f64::NAN, |s| s.v)).collect();
        Ok((d, v))
    }
}

/// Indicator of `{v > threshold}`.
pub fn support_set(v: &FieldGrid<f64>, threshold: f64) -> Result<FieldGrid<bool>> {
    if !(threshold > 0.0) {
        return Err(Error::Precondition("support threshold must be positive".into()));
    }
    Ok(FieldGrid {
        bbox: v.bbox,
        nx: v.nx,
        ny: v.ny,
        values: v
            .values
            .iter()
            .zip(&v.inside)
            .map(|(val, inside)| *inside && *val > threshold)
            .collect(),
        inside: v.inside.clone(),
        singular: v.singular.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::Gauge2;
    use nalgebra::Matrix2;

    fn opts() -> SolverOptions {
        SolverOptions {
            table_size: 512,
            ..Default::default()
        }
    }

    fn disk_solver(source: SourceTerm) -> Solver {
        let g = Geometry::new(Gauge2::euclidean(), BoundaryCurve::circle(1.0).unwrap()).unwrap();
        Solver::new(&g, source, opts()).unwrap()
    }

    #[test]
    fn radial_closed_form() {
        let s = disk_solver(SourceTerm::Constant(1.0));
        assert!((s.v_f_at(&Vector2::new(0.5, 0.0)).unwrap() - 0.25).abs() < 1e-9);
        for k in 1..20 {
            let x = Vector2::new((k as f64).cos(), (k as f64).sin()) * (0.05 * k as f64);
            assert!((s.v_f_at(&x).unwrap() - x.norm() / 2.0).abs() < 1e-8);
        }
        assert_eq!(s.v_f_at(&Vector2::zeros()).unwrap(), 0.0);
        assert!(s.v_f_at(&Vector2::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn anisotropic_closed_form() {
        let g = Gauge2::ellipsoidal(Matrix2::new(4.0, 0.0, 0.0, 1.0)).unwrap();
        let geom = Geometry::new(g, BoundaryCurve::ellipse(2.0, 1.0).unwrap()).unwrap();
        let s = Solver::new(&geom, SourceTerm::Constant(1.0), opts()).unwrap();
        let x = Vector2::new(2.0 * 0.6 * 0.3f64.cos(), 0.6 * 0.3f64.sin());
        assert!((geom.polar().eval(&x) - 0.6).abs() < 1e-14);
        assert!((s.v_f_at(&x).unwrap() - 0.3).abs() < 1e-8);
    }

    #[test]
    fn grid_on_superellipse_is_nonnegative() {
        let g = Geometry::new(Gauge2::euclidean(), BoundaryCurve::superellipse(1.0, 1.0, 4).unwrap()).unwrap();
        let f = SourceTerm::Gaussian {
            center: Vector2::zeros(),
            width: 0.5,
            amplitude: 1.0,
        };
        let s = Solver::new(&g, f, opts()).unwrap();
        let (d, v) = s.solve_grid(24, 24, None).unwrap();
        for k in 0..v.values.len() {
            if v.inside[k] {
                assert!(v.values[k].is_finite() && v.values[k] >= 0.0);
                assert!(d.values[k] >= 0.0);
                if v.singular[k] {
                    assert_eq!(v.values[k], 0.0);
                }
            } else {
                assert!(v.values[k].is_nan());
            }
        }
    }

    #[test]
    fn support_set_examples() {
        let s = disk_solver(SourceTerm::Constant(1.0));
        let (_, v) = s.solve_grid(16, 16, None).unwrap();
        let sup = support_set(&v, 1e-9).unwrap();
        let inside = v.inside.iter().filter(|b| **b).count();
        assert_eq!(sup.values.iter().filter(|b| **b).count(), inside);
        let z = s.with_source(SourceTerm::Constant(0.0)).unwrap();
        let (_, v0) = z.solve_grid(16, 16, None).unwrap();
        assert!(support_set(&v0, 1e-9).unwrap().values.iter().all(|b| !b));
        assert!(support_set(&v0, 0.0).is_err());
    }

    #[test]
    fn half_disk_source_shadow() {
        let s = disk_solver(SourceTerm::custom(|x| x.x.max(0.0)));
        // rays from the right half pass through supp f
        assert!(s.v_f_at(&Vector2::new(0.6, 0.1)).unwrap() > 0.0);
        assert_eq!(s.v_f_at(&Vector2::new(-0.6, 0.1)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_negative_sources() {
        let g = Geometry::new(Gauge2::euclidean(), BoundaryCurve::circle(1.0).unwrap()).unwrap();
        assert!(Solver::new(&g, SourceTerm::Constant(-1.0), opts()).is_err());
        let poly = SourceTerm::Polynomial(vec![PolyTerm { i: 1, j: 0, c: 1.0 }]);
        assert!(Solver::new(&g, poly, opts()).is_err());
    }

    #[test]
    fn grid_too_small() {
        let s = disk_solver(SourceTerm::Constant(1.0));
        assert!(s.solve_grid(8, 32, None).is_err());
    }
}
