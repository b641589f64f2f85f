use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("label error at row {row}: {value:?} is not one of -1, 1, +1")]
    Label { row: usize, value: String },

    #[error("database must contain more than one entry (got {n})")]
    Size { n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("kernel family {family} does not support {operation}")]
    UnsupportedKernel {
        family: &'static str,
        operation: &'static str,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("calibration unsupported: {0}")]
    CalibrationUnsupported(String),

    #[error("solver did not converge after {sweeps} sweeps (KKT residual {residual:e})")]
    Convergence {
        sweeps: usize,
        residual: f64,
        /// Best iterate reached before giving up.
        alphas: Vec<f64>,
    },

    #[error("databases are not neighbors: {0}")]
    NotNeighbors(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed model document: {0}")]
    Malformed(String),

    #[error("release contract violated: field {0:?} must not appear in a private model")]
    ReleaseContract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Fails unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Fails unless `value` lies in the open unit interval.
pub(crate) fn require_unit_open(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must lie in (0, 1), got {value}")))
    }
}

pub(crate) fn require_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
