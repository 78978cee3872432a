use std::io;

use thiserror::Error;
use zne_core::inference::InferenceError;
use zne_core::zne::ZneError;

/// Failure of a subcommand, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, invalid flags. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// A fit or extrapolation failed on valid input. Exit code 3.
    #[error("{0}")]
    Fit(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Fit(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> CliError {
        CliError::Input(msg.into())
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> CliError {
        match e {
            InferenceError::InvalidConfig(_)
            | InferenceError::LengthMismatch { .. }
            | InferenceError::NonFiniteValue(_) => CliError::Input(e.to_string()),
            _ => CliError::Fit(e.to_string()),
        }
    }
}

impl From<ZneError> for CliError {
    fn from(e: ZneError) -> CliError {
        match e {
            ZneError::Inference(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}
