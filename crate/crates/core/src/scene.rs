//! JSON scene description: gauge, curve, source, grid, tolerances and seed.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryCurve, CurveFamily};
use crate::distance::Geometry;
use crate::error::{Error, Result};
use crate::gauge::{Gauge2, QuarticBlend, Randers};
use crate::solver::{auto_bbox, PolyTerm, Solver, SolverOptions, SourceTerm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum GaugeSpec {
    Euclidean,
    Ellipsoidal {
        #[serde(rename = "Q")]
        q: [[f64; 2]; 2],
    },
    /// A registered analytic family: `randers` (`Q`, `b`) or `quartic_blend` (`weight`).
    Custom {
        name: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    Constant { c: f64 },
    Gaussian { center: [f64; 2], width: f64, amplitude: f64 },
    Polynomial { terms: Vec<PolyTerm> },
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec::Constant { c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BboxSpec {
    Auto(String),
    Explicit([f64; 4]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_n")]
    pub nx: usize,
    #[serde(default = "default_n")]
    pub ny: usize,
    #[serde(default = "default_bbox")]
    pub bbox: BboxSpec,
}

fn default_n() -> usize {
    128
}

fn default_bbox() -> BboxSpec {
    BboxSpec::Auto("auto".into())
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: default_n(),
            ny: default_n(),
            bbox: default_bbox(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_cluster")]
    pub cluster: f64,
    #[serde(default = "default_cut")]
    pub cut: f64,
    #[serde(default = "default_quad")]
    pub quadrature: f64,
}

fn default_cluster() -> f64 {
    1e-7
}
fn default_cut() -> f64 {
    1e-9
}
fn default_quad() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cluster: default_cluster(),
            cut: default_cut(),
            quadrature: default_quad(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub gauge: GaugeSpec,
    pub curve: CurveFamily,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_table")]
    pub table_size: usize,
}

fn default_n_theta() -> usize {
    256
}
fn default_table() -> usize {
    crate::transport::DEFAULT_TABLE_SIZE
}

fn config_err(field: &str, e: Error) -> Error {
    let msg = match e {
        Error::InvalidCurve(m) | Error::InvalidGauge(m) | Error::Precondition(m) | Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{field}: {msg}"))
}

fn param_f64(params: &serde_json::Map<String, serde_json::Value>, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Config(format!("gauge.params.{key} must be a number"))),
    }
}

fn param<T: serde::de::DeserializeOwned>(
    params: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    default: T,
) -> Result<T> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Config(format!("gauge.params.{key}: {e}"))),
    }
}

impl GaugeSpec {
    pub fn build(&self) -> Result<Gauge2> {
        match self {
            GaugeSpec::Euclidean => Ok(Gauge2::euclidean()),
            GaugeSpec::Ellipsoidal { q } => {
                Gauge2::ellipsoidal(Matrix2::new(q[0][0], q[0][1], q[1][0], q[1][1]))
                    .map_err(|e| config_err("gauge.Q", e))
            }
            GaugeSpec::Custom { name, params } => match name.as_str() {
                "randers" => {
                    let q: [[f64; 2]; 2] = param(params, "Q", [[2.0, 0.3], [0.3, 1.0]])?;
                    let b: [f64; 2] = param(params, "b", [0.3, -0.2])?;
                    let r = Randers::new(
                        Matrix2::new(q[0][0], q[0][1], q[1][0], q[1][1]),
                        Vector2::new(b[0], b[1]),
                    )
                    .map_err(|e| config_err("gauge.params", e))?;
                    Gauge2::custom(Arc::new(r)).map_err(|e| config_err("gauge", e))
                }
                "quartic_blend" => {
                    let weight = param_f64(params, "weight", 0.5)?;
                    if !(weight >= 0.0 && weight.is_finite()) {
                        return Err(Error::Config(format!(
                            "gauge.params.weight must be >= 0 (got {weight})"
                        )));
                    }
                    Gauge2::custom(Arc::new(QuarticBlend { weight })).map_err(|e| config_err("gauge", e))
                }
                other => Err(Error::Config(format!(
                    "gauge.name: unknown custom gauge '{other}' (known: randers, quartic_blend)"
                ))),
            },
        }
    }
}

impl SourceSpec {
    pub fn build(&self) -> SourceTerm {
        match self {
            SourceSpec::Constant { c } => SourceTerm::Constant(*c),
            SourceSpec::Gaussian { center, width, amplitude } => SourceTerm::Gaussian {
                center: Vector2::new(center[0], center[1]),
                width: *width,
                amplitude: *amplitude,
            },
            SourceSpec::Polynomial { terms } => SourceTerm::Polynomial(terms.clone()),
        }
    }
}

impl SceneConfig {
    /// Parses and validates; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SceneConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        if !(t.cluster > 0.0 && t.cluster <= 1e-3) {
            return Err(Error::Config(format!("tolerances.cluster must lie in (0, 1e-3] (got {:e})", t.cluster)));
        }
        if !(1e-10..=1e-4).contains(&t.cut) {
            return Err(Error::Config(format!("tolerances.cut must lie in [1e-10, 1e-4] (got {:e})", t.cut)));
        }
        if !(t.quadrature > 0.0 && t.quadrature <= 1e-3) {
            return Err(Error::Config(format!(
                "tolerances.quadrature must lie in (0, 1e-3] (got {:e})",
                t.quadrature
            )));
        }
        if self.grid.nx < 16 || self.grid.ny < 16 {
            return Err(Error::Config(format!(
                "grid.nx and grid.ny must be >= 16 (got {} x {})",
                self.grid.nx, self.grid.ny
            )));
        }
        match &self.grid.bbox {
            BboxSpec::Auto(s) if s != "auto" => {
                return Err(Error::Config(format!("grid.bbox must be \"auto\" or [xmin, xmax, ymin, ymax] (got \"{s}\")")));
            }
            BboxSpec::Explicit(b) if !(b[0] < b[1] && b[2] < b[3]) => {
                return Err(Error::Config("grid.bbox must satisfy xmin < xmax and ymin < ymax".into()));
            }
            _ => {}
        }
        if self.n_theta < 16 {
            return Err(Error::Config(format!("n_theta must be >= 16 (got {})", self.n_theta)));
        }
        if self.table_size < 16 {
            return Err(Error::Config(format!("table_size must be >= 16 (got {})", self.table_size)));
        }
        self.curve()?;
        self.gauge.build()?;
        Ok(())
    }

    pub fn curve(&self) -> Result<BoundaryCurve> {
        BoundaryCurve::new(self.curve.clone()).map_err(|e| config_err("curve", e))
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.gauge.build()?, self.curve()?)?.with_cluster_tol(self.tolerances.cluster)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            table_size: self.table_size,
            cut_tol: self.tolerances.cut,
            quad_tol: self.tolerances.quadrature,
        }
    }

    pub fn solver(&self, geom: &Geometry) -> Result<Solver> {
        let source = self.source.build();
        source.validate(geom.curve()).map_err(|e| config_err("source", e))?;
        Solver::new(geom, source, self.solver_options())
    }

    pub fn bbox(&self, curve: &BoundaryCurve) -> [f64; 4] {
        match &self.grid.bbox {
            BboxSpec::Explicit(b) => *b,
            BboxSpec::Auto(_) => auto_bbox(curve),
        }
    }
}
