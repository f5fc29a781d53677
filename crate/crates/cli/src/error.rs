use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit statuses. Argument errors from clap exit with 2.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 3;
    pub const SIMULATION: i32 = 4;
    pub const FIT: i32 = 5;
    pub const IO: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("fit failed: {message}")]
    Fit { message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } => exit::CONFIG,
            CliError::Simulation(_) => exit::SIMULATION,
            CliError::Fit { .. } => exit::FIT,
            CliError::Io { .. } | CliError::Csv { .. } => exit::IO,
        }
    }

    pub(crate) fn invalid(key: &str, message: impl Into<String>) -> Self {
        CliError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<tlschain::Error> for CliError {
    fn from(e: tlschain::Error) -> Self {
        CliError::Simulation(e.to_string())
    }
}
