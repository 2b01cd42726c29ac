use std::path::PathBuf;

use thinfilm_core::Error as CoreError;

/// Failures of the command-line front end, each mapped to an exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("negative initial data: {field} = {value:e} at x = {x}")]
    NegativeInitial { field: &'static str, x: f64, value: f64 },
    #[error("integration aborted: {0}")]
    Stiffness(CoreError),
    #[error("numerical failure: {0}")]
    Numeric(CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::NegativeInitial { .. } => 3,
            CliError::Stiffness(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::StiffnessAbort { .. } | CoreError::StepBudget { .. } => CliError::Stiffness(e),
            CoreError::Parameter { .. } | CoreError::Usage(_) | CoreError::Domain { .. } => {
                CliError::Config(e.to_string())
            }
            CoreError::NonFinite { .. } | CoreError::SingularMatrix { .. } => CliError::Numeric(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
