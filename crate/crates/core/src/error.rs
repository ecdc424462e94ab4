use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("layer {layer}: expected input of length {expected}, got {actual}")]
    LayerDimension {
        layer: usize,
        expected: usize,
        actual: usize,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at epoch {epoch}, batch {batch}: {context}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        context: String,
    },

    #[error("training diverged; last finite epoch: {}", match .last_finite_epoch { Some(e) => e.to_string(), None => "none".into() })]
    Diverged { last_finite_epoch: Option<usize> },

    #[error("non-differentiable activation; use bounds module")]
    NonDifferentiable,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient windows: need at least 2 dates, got {got}")]
    InsufficientWindows { got: usize },

    #[error("variance at index {index} is not strictly positive ({value})")]
    NonPositiveVariance { index: usize, value: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate row for date {date}, asset {asset}")]
    DuplicateRow { date: String, asset: String },

    #[error("empty result: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (divergence, singular systems)
    /// as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Diverged { .. } | Error::Singular(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
