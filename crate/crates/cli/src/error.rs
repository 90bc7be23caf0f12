use std::io;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] isingcyl::Error),

    #[error("{0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for invalid input, 3 for a resource cap, 1 for anything else.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(isingcyl::Error::CapExceeded(_)) => ExitCode::from(3),
            CliError::Core(_) | CliError::Usage(_) => ExitCode::from(2),
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => ExitCode::from(1),
        }
    }
}
