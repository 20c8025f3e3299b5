use thiserror::Error;

use crate::distance::Projection;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its target accuracy.
    #[error("numeric failure: {message} (achieved estimate {estimate:e})")]
    Numeric { message: String, estimate: f64 },

    /// The boundary or ray geometry contradicts the admission hypotheses.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid gauge: {0}")]
    InvalidGauge(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The point has more than one projection onto the boundary.
    #[error("point is singular ({} projections)", .0.feet.len())]
    Singular(Box<Projection>),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>, estimate: f64) -> Self {
        Error::Numeric {
            message: message.into(),
            estimate,
        }
    }
}
