use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid video: {0}")]
    InvalidVideo(String),

    #[error("integral tensors need {required} bytes, budget is {budget} bytes")]
    MemoryBudgetExceeded { required: u64, budget: u64 },

    #[error("window volume {volume} is too small for a covariance (need at least 2 cells)")]
    WindowTooSmall { volume: usize },

    #[error("window {0:?} lies outside the feature video")]
    WindowOutOfBounds([usize; 6]),

    #[error("full-video descriptor has a non-positive diagonal entry at channel {channel}")]
    DegenerateFullDescriptor { channel: usize },

    #[error("matrix is not positive definite (eigenvalue {eigenvalue:e}, largest {largest:e})")]
    NotPositiveDefinite { eigenvalue: f64, largest: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("window grid is empty for the requested fractions")]
    EmptyGrid,

    #[error("adjacency graph has no edges")]
    GraphEmpty,

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class pair ({positive}, {negative}) needs at least 2 samples per class")]
    PairTooSmall { positive: String, negative: String },

    #[error("class {label:?} has {count} samples, fewer than {folds} folds")]
    ClassTooSmall { label: String, count: usize, folds: usize },

    #[error("frame directory {0} contains no frames")]
    MissingFrames(PathBuf),

    #[error("corrupt frame {path}: {reason}")]
    CorruptFrame { path: PathBuf, reason: String },

    #[error("frame {path} is {found:?}, expected {expected:?}")]
    InconsistentDims {
        path: PathBuf,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("model file failed its integrity check")]
    ChecksumMismatch,

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the error family, used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::EmptyGrid => 2,
            Error::Io { .. } => 3,
            Error::MissingFrames(_)
            | Error::CorruptFrame { .. }
            | Error::InconsistentDims { .. }
            | Error::InvalidVideo(_)
            | Error::InvalidManifest(_)
            | Error::Json(_) => 4,
            Error::PairTooSmall { .. } | Error::ClassTooSmall { .. } => 5,
            Error::VersionMismatch { .. } | Error::ChecksumMismatch => 6,
            Error::MemoryBudgetExceeded { .. } => 7,
            Error::WindowTooSmall { .. }
            | Error::WindowOutOfBounds(_)
            | Error::DegenerateFullDescriptor { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::DimensionMismatch { .. }
            | Error::GraphEmpty
            | Error::EigenFailure(_) => 8,
        }
    }
}
