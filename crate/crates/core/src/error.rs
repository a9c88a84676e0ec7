use thiserror::Error;

pub type Result<T, E = LegsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LegsError {
    #[error("state dimension must be at least 1, got {0}")]
    InvalidDimension(usize),

    #[error("state dimension {dim} exceeds the conditioning limit of {max}")]
    ConditioningLimit { dim: usize, max: usize },

    #[error("matrix is not square and lower triangular")]
    NotLowerTriangular,

    #[error("diagonal entries {first} and {second} coincide (value {value})")]
    RepeatedEigenvalue { first: usize, second: usize, value: f64 },

    #[error("Legendre degree {degree} exceeds basis maximum {max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("component index {index} outside 1..={dim}")]
    ComponentOutOfRange { index: usize, dim: usize },

    #[error("state has {got} components, system dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid time {t}: {reason}")]
    InvalidTime { t: f64, reason: &'static str },

    #[error("invalid tolerance {0}: must be finite and at least 1e-14")]
    InvalidTolerance(f64),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("signal `{label}` evaluated to {value} at t = {t}")]
    SignalEvaluation { label: String, t: f64, value: f64 },

    #[error("horizon {horizon} exceeds the domain of signal `{label}` (ends at {domain_end})")]
    HorizonExceedsDomain { label: String, horizon: f64, domain_end: f64 },

    #[error("oracle for `{label}` did not reach tolerance {requested:e} (achieved {achieved:e})")]
    OracleNotConverged { label: String, requested: f64, achieved: f64 },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("unknown signal `{0}`")]
    UnknownSignal(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point s = {s} lies outside [0, {t}]")]
    OutsideHorizon { s: f64, t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LegsError {
    /// Failures that come from the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LegsError::OracleNotConverged { .. } | LegsError::SignalEvaluation { .. }
        )
    }
}
