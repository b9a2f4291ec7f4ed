use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Generation(String),
    #[error("{0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] sipforge::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status: 2 configuration or input error, 3 quota or
    /// generation failure, 4 verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Generation(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Core(sipforge::Error::Generation { .. } | sipforge::Error::Quota(_)) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
