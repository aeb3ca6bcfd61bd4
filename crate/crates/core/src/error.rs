use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in field `{0}`")]
    NonFinite(String),

    /// Raised by the solver when a field leaves the admissible set
    /// (NaN, non-positive density, divergence of H over tolerance).
    #[error("blow-up in `{field}`: {reason}")]
    BlowUp { field: String, reason: String },

    #[error("gauge violation: right-hand side mean {mean:e} exceeds tolerance {tolerance:e}")]
    GaugeViolation { mean: f64, tolerance: f64 },

    #[error("unsupported norm exponent {0}")]
    UnsupportedExponent(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot header mismatch: {0}")]
    HeaderMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn blow_up(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::BlowUp {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors that the driver reports with the blow-up exit code.
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::NonFinite(_))
    }
}
