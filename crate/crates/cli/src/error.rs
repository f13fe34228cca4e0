//! CLI error type carrying the process exit code.

use std::fmt;

use arqshare::Error as CoreError;

/// Validation or runtime failure (simulation disagreeing with the model,
/// unwritable output, ...).
pub const EXIT_FAILURE: u8 = 1;
/// Bad flags or configuration.
pub const EXIT_USAGE: u8 = 2;
/// The constraint set admits no policy.
pub const EXIT_INFEASIBLE: u8 = 3;
/// An internal numerical failure (lost bracket, unbounded program,
/// corrupted occupancies, failed self-check).
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError { code: EXIT_FAILURE, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Domain(_)
            | CoreError::Config(_)
            | CoreError::Mode(_)
            | CoreError::Hypothesis(_)
            | CoreError::Budget(_) => EXIT_USAGE,
            CoreError::Infeasible => EXIT_INFEASIBLE,
            CoreError::Bracket(_) | CoreError::Unbounded | CoreError::Numerical(_) => {
                EXIT_NUMERICAL
            }
            CoreError::Io(_) => EXIT_FAILURE,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(e.to_string())
    }
}
