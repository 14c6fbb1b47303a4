use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Kernel mass could not be brought inside the tolerance band even at the
    /// largest allowed working-grid refinement.
    #[error("kernel normalization failed: |sum - 1| = {deviation:.3e} > {tolerance:.3e} at refinement x{factor}")]
    NormalizationFailure {
        deviation: f64,
        tolerance: f64,
        factor: usize,
    },

    #[error("backtraced point {position:?} left the bounded domain")]
    DriftOutOfDomain { position: [f64; 2] },

    #[error("solution blew up at step {step} (max |u| = {max_abs:.3e})")]
    Blowup { step: usize, max_abs: f64 },

    #[error("operation requires a linear PDE: {0}")]
    NonlinearPde(String),

    #[error("state-dependent forcing evaluated without a state field")]
    MissingState,

    #[error("reference field has zero norm in frame {frame}")]
    ZeroReference { frame: usize },

    #[error("format error: {0}")]
    Format(String),

    /// Error frame returned by a propagation service.
    #[error("service error {code}: {message}")]
    Service { code: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
