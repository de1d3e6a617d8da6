use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Every variant has a stable short `kind()` string so that command-line
/// front ends can emit one-line machine-parsable diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Class list, shape or magnification of an input does not fit the operation.
    #[error("schema mismatch: {0}")]
    Schema(String),

    /// A numeric or enumerated parameter is out of its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A grid or list has the wrong number of elements.
    #[error("shape error: {0}")]
    Shape(String),

    /// The map contains no valid tissue cell, so no fraction can be formed.
    #[error("no valid tissue cells")]
    NoTissue,

    /// A statistic is undefined for the given data (e.g. zero variance).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Parameter(_) => "parameter",
            Error::Shape(_) => "shape",
            Error::NoTissue => "no-tissue",
            Error::Undefined(_) => "undefined",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
