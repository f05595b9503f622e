//! CLI error classes mapped to exit codes.

use std::fmt;

/// Exit codes: 2 configuration, 3 numeric failure, 4 I/O.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<dfkd::Error> for CliError {
    fn from(e: dfkd::Error) -> Self {
        use dfkd::Error::*;
        match &e {
            InvalidConfig(_) | ShapeMismatch(_) => CliError::Config(e.to_string()),
            NanInput(_) | Diverged { .. } | ZeroEnergy(_) => CliError::Numeric(e.to_string()),
            InputTooShort(_) | MalformedWav(_) | Checkpoint(_) | Io(_) | Json(_) => {
                CliError::Io(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
