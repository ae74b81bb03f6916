use std::path::Path;

use scmkit::graph::GraphError;
use scmkit::io::FormatError;
use scmkit::usecase::UseCaseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Exhausted(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Exhausted(_) => 4,
        }
    }

    pub fn in_file(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{}: {err}", path.display()))
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::ExhaustedRetries { .. } => CliError::Exhausted(e.to_string()),
            GraphError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<UseCaseError> for CliError {
    fn from(e: UseCaseError) -> Self {
        match e {
            UseCaseError::Graph(g) => g.into(),
            UseCaseError::Config(_) => CliError::Usage(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Validation(e.to_string())
    }
}
