use std::fmt;
use std::process::ExitCode;

/// Failure of a CLI run, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or incomplete configuration: exit 2.
    Config(String),
    /// A numeric operation failed: exit 3.
    Numeric { op: &'static str, source: corrdyn::CorrError },
    /// Output could not be written: exit 3.
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numeric { .. } | CliError::Io { .. } => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numeric { op, source } => write!(f, "{op} failed: {source}"),
            CliError::Io { path, source } => write!(f, "cannot write {path}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Attach the failing operation name to a core error.
pub trait Op<T> {
    fn op(self, name: &'static str) -> Result<T, CliError>;
}

impl<T> Op<T> for corrdyn::Result<T> {
    fn op(self, name: &'static str) -> Result<T, CliError> {
        self.map_err(|source| match source {
            corrdyn::CorrError::InvalidArgument(msg) => CliError::Config(format!("{name}: {msg}")),
            source => CliError::Numeric { op: name, source },
        })
    }
}
