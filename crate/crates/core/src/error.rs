use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: [usize; 3], actual: [usize; 3] },

    #[error("crop size {size} exceeds volume extent {dim} along axis {axis}")]
    CropTooLarge { axis: usize, size: usize, dim: usize },

    #[error("patch at {origin:?} of side {size} does not fit inside {dims:?}")]
    PatchOutOfBounds { origin: [usize; 3], size: usize, dims: [usize; 3] },

    #[error("layer {index} ({layer}): {reason}")]
    Shape { index: usize, layer: String, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("need {needed} eligible reference scans, only {available} available")]
    ReferenceShortfall { needed: usize, available: usize },

    #[error("zero variance input to correlation")]
    ZeroVariance,

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {loss}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short stable identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::CropTooLarge { .. } => "crop_too_large",
            Error::PatchOutOfBounds { .. } => "patch_out_of_bounds",
            Error::Shape { .. } => "shape",
            Error::InsufficientData(_) => "insufficient_data",
            Error::ReferenceShortfall { .. } => "reference_shortfall",
            Error::ZeroVariance => "zero_variance",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
