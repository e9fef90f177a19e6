use std::fmt;

/// A failure with its process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNPHYSICAL: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn unphysical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_UNPHYSICAL, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<cvqkd_core::Error> for CliError {
    fn from(e: cvqkd_core::Error) -> Self {
        use cvqkd_core::Error::*;
        let message = e.to_string();
        match e {
            InvalidArgument(_) => CliError::usage(message),
            Unphysical(_) | EmptyDomain(_) => CliError::unphysical(message),
            NumericalDomain(_) | DegenerateMeasurement(_) => CliError::numerical(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::usage(format!("csv error: {e}"))
    }
}
