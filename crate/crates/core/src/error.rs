use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile is invalid: {0}")]
    InvalidProfile(String),

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("rescaling pushes mass {lost:.3e} past the grid edge (tolerance {tolerance:.3e})")]
    SupportOverflow { lost: f64, tolerance: f64 },

    #[error("time step {tau:.3e} violates the CFL limit {limit:.3e}")]
    CflViolation { tau: f64, limit: f64 },

    #[error("time step collapsed below {0:.3e}")]
    CflCollapse(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
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

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::GridMismatch => 1,
            Error::InvalidProfile(_)
            | Error::SupportOverflow { .. }
            | Error::CflViolation { .. }
            | Error::CflCollapse(_)
            | Error::NonFinite(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
        }
    }
}
