use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors surfaced by the command line, grouped by exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: ban_core::Error,
    },
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 0 success, 1 verification failure, 2 I/O or usage, 3 data consistency.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Verification(_) => 1,
            AppError::Io { .. } | AppError::Usage(_) => 2,
            AppError::Parse { .. } | AppError::Data(_) | AppError::Core { .. } => 3,
        }
    }
}

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, context: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for ban_core::Result<T> {
    fn context(self, context: impl Into<String>) -> Result<T> {
        self.map_err(|source| AppError::Core {
            context: context.into(),
            source,
        })
    }
}
