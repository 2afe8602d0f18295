use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sampler failed to start: {0}")]
    Startup(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArchitecture(_) | Error::InvalidConfig(_) => "config",
            Error::DimensionMismatch { .. } | Error::InvalidInput(_) => "input",
            Error::Startup(_) => "startup",
            Error::Numerical(_) => "numerical",
            Error::Data { .. } | Error::Csv(_) | Error::Json(_) => "data",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
