use pbc_core::PbcError;
use thiserror::Error;

/// Failures of a command, each tied to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid config {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    /// A design, audit or check ran to completion and reported failure.
    #[error("{0}")]
    Failed(String),

    #[error("numerical divergence at t={time}")]
    Diverged { time: f64 },

    #[error(transparent)]
    Core(#[from] PbcError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Failed(_) => 1,
            CliError::Diverged { .. } => 3,
            CliError::Core(PbcError::NumericalBlowup { .. }) => 3,
            CliError::Core(PbcError::Config(_) | PbcError::NotCheckable) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
