//! Driver errors and their exit codes.

/// Failure of a driver operation.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or suite name.
    #[error("usage error: {0}")]
    Usage(String),
    /// File system failure, reported verbatim.
    #[error("{0}")]
    Io(#[from] std::io::Error),
    /// Library failure outside a check.
    #[error(transparent)]
    Core(#[from] vertexlab_core::Error),
    /// CSV encoding failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Result alias.
pub type CliResult<T> = Result<T, CliError>;
