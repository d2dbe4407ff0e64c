use std::path::PathBuf;

/// Errors of the IO layer. Each variant maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Audio { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spkid_core::Error),
    #[error("{failed} of {total} experiment cells failed")]
    PartialFailure { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage or configuration problems, 2 for bad data, 3 when an
    /// experiment ran but some cells failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::PartialFailure { .. } => 3,
            _ => 2,
        }
    }
}
