use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: row {row}, column {column}: {msg}")]
    Schema {
        path: PathBuf,
        row: u64,
        column: String,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] lqrpg::Error),
}

pub type LabResult<T> = std::result::Result<T, LabError>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const PARTIAL: i32 = 4;
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Schema { .. } => exit::CONFIG,
            LabError::Numerical(_) | LabError::Core(lqrpg::Error::Numerical(_)) => exit::NUMERICAL,
            LabError::Core(_) => exit::CONFIG,
            LabError::Io { .. } => exit::FAILURE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}
