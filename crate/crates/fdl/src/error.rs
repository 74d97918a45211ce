//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("shape mismatch in layer `{layer}`: {details}")]
    ShapeMismatch { layer: String, details: String },

    #[error("backward called without a cached forward pass")]
    MissingForwardCache,

    #[error("ODE integration failed at t = {t}: step size underflow")]
    StepSizeUnderflow { t: f64 },

    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch} (layer norms: {norms})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        norms: String,
    },

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("scaler mismatch between model and dataset: {0}")]
    ScalerMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::NonFiniteLoss { .. } | Error::StepSizeUnderflow { .. } => 4,
            _ => 3,
        }
    }
}
