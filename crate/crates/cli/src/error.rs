use outflow_core::Error as CoreError;
use thiserror::Error;

/// CLI failure, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// One or more verification checks failed.
    #[error("check failed: {0}")]
    Check(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    /// Breakdown during evolution, or no admissible stationary profile.
    #[error("{0}")]
    Breakdown(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Breakdown(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::DomainError(_)
            | CoreError::GridMismatch(_)
            | CoreError::CflViolation { .. }
            | CoreError::NonPhysicalState(_)
            | CoreError::OutOfChart(_) => CliError::Validation(msg),
            CoreError::NoProfile { .. }
            | CoreError::GridTooCoarse { .. }
            | CoreError::InsufficientTail(_)
            | CoreError::SingularJacobian { .. }
            | CoreError::Breakdown { .. } => CliError::Breakdown(msg),
            CoreError::MissingHistory(_) | CoreError::InsufficientSnapshots { .. } => CliError::Check(msg),
            CoreError::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
