use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive semi-definite: eigenvalue {eigenvalue:e} below tolerance -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capacity exceeded: {what} = {got} (limit {limit})")]
    CapacityExceeded {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("Gram matrix is not trace-normalized: trace {trace} for N = {n}")]
    NotNormalized { trace: f64, n: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("output dimension {0} has zero variance")]
    DegenerateDimension(usize),

    #[error("insufficient data: requested {requested}, available {available}")]
    InsufficientData { requested: usize, available: usize },

    #[error("{g} is not a primitive root modulo {p}")]
    InvalidGenerator { g: u64, p: u64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input (files, arguments) rather
    /// than by a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Format { .. }
                | Error::InvalidInput(_)
                | Error::InsufficientData { .. }
                | Error::InvalidGenerator { .. }
                | Error::Shape(_)
                | Error::CapacityExceeded { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::NotPsd { .. } => "not_psd",
            Error::Shape(_) => "shape",
            Error::CapacityExceeded { .. } => "capacity_exceeded",
            Error::InvalidKernel(_) => "invalid_kernel",
            Error::NotNormalized { .. } => "not_normalized",
            Error::InvalidInput(_) => "invalid_input",
            Error::Format { .. } => "format",
            Error::DegenerateDimension(_) => "degenerate_dimension",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvalidGenerator { .. } => "invalid_generator",
            Error::Io { .. } => "io",
        }
    }

    pub fn path(&self) -> Option<&std::path::Path> {
        match self {
            Error::Io { path, .. } | Error::Format { path, .. } => Some(path),
            _ => None,
        }
    }
}
