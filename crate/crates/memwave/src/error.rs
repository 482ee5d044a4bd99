use std::path::PathBuf;

/// Failures surfaced by the command layer, one per exit code class.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) | CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }
}

impl From<memwave_core::Error> for CliError {
    fn from(e: memwave_core::Error) -> Self {
        if e.is_validation() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
