use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A single input row failed validation. `row` is the 1-based data row
    /// (the header is not counted).
    #[error("{source_name}: row {row}: {message}")]
    Row {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("invalid risk tables: {0}")]
    Tables(String),

    #[error("unknown sector code `{0}`")]
    UnknownSector(String),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("unknown country `{0}`")]
    UnknownCountry(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("missing predictor `{0}`")]
    MissingPredictor(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn row(source_name: &str, row: usize, message: impl Into<String>) -> Self {
        Error::Row {
            source_name: source_name.to_string(),
            row,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Numerical(_) => ErrorKind::Numerical,
            Error::Io { .. } => ErrorKind::Io,
            Error::Csv(e) if e.is_io_error() => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}
