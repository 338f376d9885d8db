use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {}{}: {message}", path.display(), field.as_ref().map(|f| format!(" at `{f}`")).unwrap_or_default())]
    Config {
        path: PathBuf,
        field: Option<String>,
        message: String,
    },

    #[error("{}: {0}", .0.name())]
    Core(#[from] manifold_core::Error),

    #[error("SchemaMismatch: {path}: {reason}", path = .path.display())]
    SchemaMismatch { path: PathBuf, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            _ => 2,
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        CliError::Core(manifold_core::Error::Io(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
