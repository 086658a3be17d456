use std::path::Path;

use thiserror::Error;

/// Failures, split by process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Inputs violate a precondition (exit code 2).
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Anything else (exit code 1).
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Internal(anyhow::Error::new(err).context(format!("{}", path.display())))
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Precondition(m) => CliError::Precondition(format!("{what}: {m}")),
            CliError::Internal(e) => CliError::Internal(e.context(what.to_owned())),
        }
    }
}

impl From<moderator_core::Error> for CliError {
    fn from(err: moderator_core::Error) -> Self {
        use moderator_core::Error as E;
        match err {
            E::SolverFailure(_) | E::Oracle(_) | E::MalformedLayout(_) | E::NoDeviation => {
                CliError::Internal(anyhow::Error::new(err))
            }
            other => CliError::Precondition(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
