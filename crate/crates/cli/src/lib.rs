//! Library side of the benchmark CLI: configuration, experiment runners and
//! report writing. The `sage` binary is a thin argument-parsing shell over
//! these functions so integration tests can drive them directly.

pub mod config;
pub mod report;
pub mod runner;

/// CLI-level failures, split by exit code: configuration problems exit
/// with 1, runtime failures with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
