use std::path::PathBuf;

use thiserror::Error;

/// Failure of a command. [`CliError::exit_code`] gives the process status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {reason}")]
    Path { path: PathBuf, reason: String },

    #[error("invalid config {path}: {reason}")]
    ConfigFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] cyclevc::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

fn core_exit_code(e: &cyclevc::Error) -> i32 {
    use cyclevc::Error as E;
    match e {
        E::Shape(_)
        | E::InvalidInput(_)
        | E::Config(_)
        | E::Analysis(_)
        | E::Backend(_)
        | E::Format { .. }
        | E::Wav { .. } => EXIT_USER,
        E::Io { source, .. } => match source.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => EXIT_USER,
            _ => EXIT_INTERNAL,
        },
        E::Stage { source, .. } | E::AtIteration { source, .. } => core_exit_code(source),
        E::NonFinite { .. } | E::Json(_) => EXIT_INTERNAL,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Path { .. } | CliError::ConfigFile { .. } => EXIT_USER,
            CliError::Core(e) => core_exit_code(e),
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn path(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CliError::Path {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
