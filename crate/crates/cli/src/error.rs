use std::process::ExitCode;

use clvkit::diagnostics::DiagnosticsError;
use clvkit::{CocycleError, GinelliError, GrassmannError, OracleError};

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A check ran to completion and did not pass (exit 1).
    #[error("checks failed: {0}")]
    ChecksFailed(String),
    /// Invalid or missing configuration (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical routine failed (exit 3); `name` is the originating error variant.
    #[error("numerical error [{name}]: {message}")]
    Numerical { name: &'static str, message: String },
    /// Reading or writing files failed (exit 4).
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::ChecksFailed(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Io(_) => 4,
        })
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    pub fn non_finite(what: &str) -> Self {
        Self::Numerical {
            name: "cli::NonFinite",
            message: format!("{what} contains a non-finite value"),
        }
    }
}

fn numerical(name: &'static str, message: String) -> CliError {
    CliError::Numerical { name, message }
}

impl From<CocycleError> for CliError {
    fn from(e: CocycleError) -> Self {
        match e {
            CocycleError::BadSpec(_) | CocycleError::OutOfRange { .. } => Self::Config(format!("[{}] {e}", e.name())),
            CocycleError::Io { .. } | CocycleError::Format(_) => Self::Io(format!("[{}] {e}", e.name())),
            _ => numerical(e.name(), e.to_string()),
        }
    }
}

impl From<GinelliError> for CliError {
    fn from(e: GinelliError) -> Self {
        match e {
            GinelliError::BadConfig(_) => Self::Config(format!("[{}] {e}", e.name())),
            GinelliError::Cocycle(inner) => inner.into(),
            _ => numerical(e.name(), e.to_string()),
        }
    }
}

impl From<GrassmannError> for CliError {
    fn from(e: GrassmannError) -> Self {
        numerical(e.name(), e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BadRequest(_) => Self::Config(format!("[{}] {e}", e.name())),
            OracleError::Cocycle(inner) => inner.into(),
            _ => numerical(e.name(), e.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::BadConfig(_) => Self::Config(format!("[{}] {e}", e.name())),
            DiagnosticsError::Ginelli(inner) => inner.into(),
            DiagnosticsError::Cocycle(inner) => inner.into(),
            DiagnosticsError::Oracle(inner) => inner.into(),
            _ => numerical(e.name(), e.to_string()),
        }
    }
}
