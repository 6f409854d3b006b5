use std::fmt::Display;
use std::path::Path;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or configuration: exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, unwritable or malformed data: exit code 2.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn with_context(self, context: impl Display) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{context}: {m}")),
        }
    }
}

impl From<voxtrav_core::Error> for CliError {
    fn from(e: voxtrav_core::Error) -> Self {
        match e {
            voxtrav_core::Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<voxtrav_scnn::Error> for CliError {
    fn from(e: voxtrav_scnn::Error) -> Self {
        match e {
            voxtrav_scnn::Error::Config(m) => CliError::Usage(m),
            voxtrav_scnn::Error::Core(c) => c.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Prefixes errors with the file they concern.
pub trait AtPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T, E: Into<CliError>> AtPath<T> for Result<T, E> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| e.into().with_context(path.display()))
    }
}
