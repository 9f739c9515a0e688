use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric non-convergence: {0}")]
    NonConvergence(String),
    #[error("internal fault: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<loopmetric::Error> for CliError {
    fn from(e: loopmetric::Error) -> Self {
        use loopmetric::Error as E;
        match e {
            E::NotConvergent(msg) => CliError::NonConvergence(msg),
            E::Parse(_)
            | E::InvalidGraph(_)
            | E::Disconnected(_)
            | E::NonPositiveWeight { .. }
            | E::BasepointWeight { .. }
            | E::BasepointNotMinimal { .. }
            | E::ParameterTooSmall { .. }
            | E::InvalidParameter(_)
            | E::BudgetExceeded { .. }
            | E::InsufficientDepth { .. } => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
