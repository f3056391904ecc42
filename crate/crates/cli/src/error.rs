use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<robreg::Error> for CliError {
    fn from(err: robreg::Error) -> Self {
        use robreg::Error::*;
        let msg = err.to_string();
        match err {
            InvalidParameter(_) => CliError::Config(msg),
            InvalidInput(_)
            | SingularDesign { .. }
            | ZeroDegreesOfFreedom { .. }
            | InsufficientReplication { .. } => CliError::Data(msg),
            Numerical(_) | Divergence { .. } | TooManyFailures { .. } => CliError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
