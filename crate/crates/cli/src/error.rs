use std::path::PathBuf;
use std::process::ExitCode;

use attnflow_core::CoreError;

/// Failures with a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A diagnostic the command is meant to enforce did not hold.
    #[error("{0}")]
    CheckFailed(String),
    #[error("{0}")]
    Config(String),
    #[error("invalid parameter at `{path}`: {reason}")]
    InvalidParameter { path: String, reason: String },
    #[error("{action} {}: {source}", path.display())]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trajectory has no retained {what}; rerun simulate with `--retain {what}`")]
    MissingRetained { what: &'static str },
    #[error("{0}: this command needs planar (d = 2) data")]
    Dimension(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::CheckFailed(_) => 1,
            CliError::Config(_) | CliError::InvalidParameter { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::MissingRetained { .. } => 4,
            CliError::Dimension(_) => 5,
        })
    }

    pub fn io(action: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            action,
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::MissingRetained(what) => CliError::MissingRetained { what },
            CoreError::UnsupportedDimension(d) => CliError::Dimension(format!("dimension {d}")),
            CoreError::InvalidParameter { name, reason } => CliError::InvalidParameter {
                path: name.to_string(),
                reason,
            },
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
