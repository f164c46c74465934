use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the hypervector, encoder, model and theory APIs.
#[derive(Debug, Error)]
pub enum HdcError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid dimension {0}: must be in 1..=2^20")]
    InvalidDimension(usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("feature value {value} at index {index} is out of range (num_values = {num_values})")]
    FeatureOutOfRange {
        index: usize,
        value: usize,
        num_values: usize,
    },

    #[error("label {label} at sample {index} is out of range (K = {classes})")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },

    #[error("class {0} has no training samples")]
    EmptyClass(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("encoder has no batch-norm state to fold")]
    NoBatchNorm,

    #[error("zero vector where a nonzero direction is required")]
    ZeroVector,

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Data(#[from] DataError),
}

/// Errors from the EHDC / EHDD binary containers.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic at offset 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated input at offset {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },

    #[error("unsupported weight width {0} bytes")]
    BadWeightWidth(u8),

    #[error("invalid content at offset {offset}: {reason}")]
    Invalid { offset: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised while reading or preprocessing datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad IDX magic 0x{found:08x} at offset 0 (expected 0x{expected:08x})")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated payload, expected {expected} bytes but found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image file has {images} items but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: cannot parse field {column}: {text:?}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        text: String,
    },

    #[error("{path}:{line}: label {label} outside {min}..={max}")]
    LabelRange {
        path: PathBuf,
        line: usize,
        label: i64,
        min: i64,
        max: i64,
    },

    #[error("NaN feature at row {row}, column {column}")]
    NanFeature { row: usize, column: usize },

    #[error("invalid quantizer: {0}")]
    Quantizer(String),
}

pub type Result<T, E = HdcError> = std::result::Result<T, E>;
