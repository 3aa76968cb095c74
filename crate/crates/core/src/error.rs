use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;

/// Errors raised by every stage of the curation pipeline.
#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A shard line that could not be turned into a document.
    #[error("{message} at {file}:{line} (byte {offset})")]
    Record {
        file: String,
        line: u64,
        offset: u64,
        message: String,
    },

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("{0}")]
    Data(String),
}

impl ForgeError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        ForgeError::Data(msg.into())
    }

    /// Process exit code used by the command-line front end: 1 for a bad
    /// invocation or configuration, 2 for bad data, 3 for IO failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ForgeError::Config(_) => 1,
            ForgeError::Io { .. } => 3,
            _ => 2,
        }
    }
}
