use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("value out of range at ({row},{col}): {value}")]
    ValueOutOfRange { row: usize, col: usize, value: f64 },

    #[error("label out of range at ({row},{col}): {label} (roster has {categories} categories)")]
    LabelOutOfRange {
        row: usize,
        col: usize,
        label: usize,
        categories: usize,
    },

    #[error("grid must be at least 1x1, got {height}x{width}")]
    EmptyGrid { height: usize, width: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("invalid triplet: {0}")]
    InvalidTriplet(String),

    #[error("invalid relation `{0}` (expected above, below, left or right)")]
    InvalidRelation(String),

    #[error("invalid scene spec `{scene}`: {reason}")]
    InvalidScene { scene: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed grid data: {0}")]
    Format(String),

    #[error("set mismatch: {0}")]
    SetMismatch(String),

    #[error("unknown oracle `{0}`")]
    UnknownOracle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for invalid specs and
    /// configuration, 3 for category and constraint problems, 4 for
    /// mismatched scene sets, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidScene { .. } | Error::InvalidConfig(_) | Error::UnknownOracle(_) => 2,
            Error::UnknownCategory(_)
            | Error::InvalidTriplet(_)
            | Error::InvalidRelation(_)
            | Error::LabelOutOfRange { .. } => 3,
            Error::SetMismatch(_) => 4,
            _ => 1,
        }
    }
}
