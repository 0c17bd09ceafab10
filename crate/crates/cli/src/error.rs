use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("config is missing the `{0}` section")]
    Missing(String),

    #[error("{0}")]
    Invalid(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] dacs_core::Error),
}

impl CliError {
    /// 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Missing(_) | CliError::Invalid(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Io { .. } | CliError::Core(_) => 2,
        }
    }
}
