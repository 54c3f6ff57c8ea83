use std::path::PathBuf;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] dpope_core::Error),
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Load { path: String, source: dpope_core::Error },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        HarnessError::Validation(msg.into())
    }

    /// Process exit code: 1 for invalid input, 2 for runtime and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(_) | HarnessError::Validation(_) | HarnessError::Load { .. } => 1,
            HarnessError::Io { .. } | HarnessError::Runtime(_) => 2,
        }
    }
}
