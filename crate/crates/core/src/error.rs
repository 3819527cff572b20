use thiserror::Error;

use crate::linalg::Mode;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{field}` must be strictly positive (got {value})")]
    NonPositiveParameter { field: &'static str, value: f64 },

    #[error("parameter `{field}` is invalid: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("eigenvalue iteration did not converge within {iterations} sweeps (n = {n})")]
    EigenFailure { n: usize, iterations: usize },

    #[error("drift matrix is not stable (max Re λ = {margin:e})")]
    UnstableSystem { margin: f64 },

    #[error("Lyapunov solve broke down: {0}")]
    SolveFailure(String),

    #[error("Kronecker system is singular (A is marginally stable)")]
    SingularSystem,

    #[error("covariance integration overflowed at t = {t:e} (entry {value:e})")]
    StepOverflow { t: f64, value: f64 },

    #[error("mode {0} is not part of this covariance matrix")]
    UnknownMode(Mode),

    #[error("covariance matrix shape is invalid: {0}")]
    BadShape(String),

    #[error("covariance matrix is not physical: {0}")]
    NonPhysicalInput(String),

    #[error("determinant is not positive ({0:e})")]
    NonPositiveDeterminant(f64),

    #[error("monogamy violated on split {split}: residual {residual:e}")]
    MonogamyViolation { split: String, residual: f64 },

    #[error("invalid sweep: {0}")]
    InvalidSpec(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("no stable point on the detuning grid")]
    NoStableRegion,

    #[error("at {point}: {source}")]
    AtPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, point: impl Into<String>) -> Self {
        Error::AtPoint {
            point: point.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
