//! Library surface of the pipeline driver, so integration tests can run
//! the same commands the binary does.

pub mod config;
pub mod manifest;
pub mod pipeline;

use thiserror::Error;

/// Errors split by exit code: configuration problems exit 1, data problems
/// exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}
