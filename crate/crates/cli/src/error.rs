use thiserror::Error;

/// Failures mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input, configuration or missing artifacts: exit 2.
    #[error("{0}")]
    Input(String),
    /// Fitting or iteration failed to converge: exit 3.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<stopgame::Error> for CliError {
    fn from(e: stopgame::Error) -> Self {
        match e {
            stopgame::Error::Fit(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Attaches a path to I/O failures.
pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = Result<T, CliError>;
