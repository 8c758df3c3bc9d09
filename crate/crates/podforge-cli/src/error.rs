//! Process-level error split. Usage and configuration problems exit with
//! code 2, pipeline stage failures with code 1; success is 0. The split is
//! part of the CLI contract and scripts may rely on it.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn pipeline(msg: impl std::fmt::Display) -> Self {
        CliError::Pipeline(msg.to_string())
    }

    /// Pipeline failure labeled with the stage that produced it.
    pub fn stage(stage: &str, err: impl std::fmt::Display) -> Self {
        CliError::Pipeline(format!("{stage}: {err}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Pipeline(_) => 1,
        }
    }
}
