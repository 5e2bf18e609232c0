// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] ncqed::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for integration
    /// failures, 4 for fit failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(ncqed::Error::Integration { .. }) => 3,
            HarnessError::Core(ncqed::Error::Fit(_)) => 4,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
