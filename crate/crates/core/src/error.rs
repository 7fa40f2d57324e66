use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or unresolvable names, detected before any evaluation.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called with arguments that violate its contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// Observed data is unusable (non-finite objective values, malformed traces).
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    ///
    /// Configuration, usage and filesystem problems map to 2; failures that
    /// come from the data or the numerics map to 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Io { .. } => 2,
            Error::Data(_) | Error::Numerical(_) => 3,
        }
    }
}
