//! Command-line layer over `hmf-core`: config parsing, artifact writers and
//! the named experiment presets.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Schema(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 assertion, 2 usage or schema, 3 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) | CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<hmf_core::Error> for CliError {
    fn from(e: hmf_core::Error) -> Self {
        CliError::Invariant(e.to_string())
    }
}
