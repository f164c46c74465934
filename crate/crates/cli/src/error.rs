use std::path::PathBuf;

use hdc_core::{DataError, FormatError, HdcError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("dataset {dataset:?} not found: missing {path}")]
    MissingData { dataset: String, path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(HdcError),
}

impl CliError {
    /// Process exit status: 2 config, 3 data, 4 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) | Self::MissingData { .. } => 3,
            Self::Core(HdcError::Data(_)) | Self::Core(HdcError::Format(_)) => 3,
            Self::Core(HdcError::InvalidArgument(_)) | Self::Core(HdcError::InvalidDimension(_)) => 2,
            Self::Io { .. } | Self::Csv(_) | Self::Core(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<HdcError> for CliError {
    fn from(e: HdcError) -> Self {
        Self::Core(e)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::Core(HdcError::Data(e))
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        Self::Core(HdcError::Format(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
