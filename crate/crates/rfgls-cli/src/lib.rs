//! Support library of the `rfgls` binary: configuration payloads, strict
//! CSV IO, and fit-artifact persistence.

pub mod config;
pub mod csvio;
pub mod model_io;

/// Command failures, mapped onto exit codes by the binary.
#[derive(Debug)]
pub enum CliError {
    /// malformed configuration or input files -> exit 2
    Config(String),
    /// a failure while running -> exit 1
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rfgls::Error> for CliError {
    fn from(e: rfgls::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
