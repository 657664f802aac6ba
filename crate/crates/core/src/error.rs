use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical overflow in {0}")]
    NumericalOverflow(&'static str),

    #[error("innovation covariance is not positive definite")]
    SingularInnovation,

    #[error("out-of-order frame: expected k = {expected}, got k = {got}")]
    Ordering { expected: u64, got: u64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported schema version {found} (this build reads {supported})")]
    Version { found: String, supported: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("no ground truth available: {0}")]
    NoGroundTruth(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the environment rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
