use std::fmt;

use roi_core::Error;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_TRAINING: u8 = 3;
pub const EXIT_EVALUATION: u8 = 4;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn from_input(e: Error) -> Self {
        CliError::input(e.to_string())
    }

    /// Degenerate labels while fitting are training failures; anything else
    /// is bad input.
    pub fn from_training(e: Error) -> Self {
        match e {
            Error::SingleClass(_) | Error::ClassTooSmall { .. } | Error::EmptyTrainingSet => {
                CliError {
                    code: EXIT_TRAINING,
                    message: e.to_string(),
                }
            }
            other => CliError::from_input(other),
        }
    }

    pub fn from_evaluation(e: Error) -> Self {
        match e {
            Error::SingleClass(_) => CliError {
                code: EXIT_EVALUATION,
                message: e.to_string(),
            },
            other => CliError::from_input(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
