use thiserror::Error;

use dgcca_core::trainer::TrainError;

/// Failure of a command, classified by the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Diverged(String),
    #[error("gradient check failed: {0}")]
    Gradcheck(String),
}

impl CliError {
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const DIVERGED: i32 = 4;
    pub const GRADCHECK: i32 = 5;

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => Self::CONFIG,
            Self::Data(_) => Self::DATA,
            Self::Diverged(_) => Self::DIVERGED,
            Self::Gradcheck(_) => Self::GRADCHECK,
        }
    }

    pub fn data(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        Self::Data(format!("{context}: {err}"))
    }
}

impl From<TrainError> for CliError {
    fn from(err: TrainError) -> Self {
        match err {
            TrainError::Setup(e) => Self::Config(e.to_string()),
            other => Self::Diverged(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
