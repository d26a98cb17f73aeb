//! Crate-wide error type.
//!
//! Errors are split into two classes for the CLI exit-code contract:
//! validation errors (bad shapes, bad configs, bad arguments) and runtime
//! errors (numeric failures, corrupt files, I/O).

use std::path::PathBuf;

/// Exit-code class of an error. Validation maps to exit code 1,
/// runtime/numeric to exit code 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Runtime,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("{op}: output would be empty ({detail})")]
    EmptyOutput { op: &'static str, detail: String },

    #[error("{what} must be divisible by {by}, got {got}")]
    NotDivisible {
        what: &'static str,
        by: usize,
        got: usize,
    },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: [usize; 4] },

    #[error("tape already consumed by backward; run a fresh forward pass")]
    TapeConsumed,

    #[error("non-finite gradient in parameter '{param}'")]
    NonFiniteGrad { param: String },

    #[error("non-finite loss at iteration {iteration} (total = {value})")]
    NonFiniteLoss { iteration: u64, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("CRF is not strictly monotone increasing ({detail})")]
    CrfNotMonotone { detail: String },

    #[error("mask threshold alpha must lie in (0, 0.5), got {alpha}")]
    AlphaOutOfRange { alpha: f64 },

    #[error("radiance domain mismatch: expected {expected}, got {got}")]
    DomainMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("PU table is not strictly monotone at row {row}")]
    PuTableNotMonotone { row: usize },

    #[error("malformed {format} file {path:?}: {detail}")]
    FileFormat {
        format: &'static str,
        path: PathBuf,
        detail: String,
    },

    #[error("checkpoint config does not match requested config: {detail}")]
    CheckpointMismatch { detail: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Which exit-code class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ShapeMismatch { .. }
            | Error::EmptyOutput { .. }
            | Error::NotDivisible { .. }
            | Error::NonScalarLoss { .. }
            | Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::CrfNotMonotone { .. }
            | Error::AlphaOutOfRange { .. }
            | Error::DomainMismatch { .. }
            | Error::PuTableNotMonotone { .. }
            | Error::CheckpointMismatch { .. } => ErrorClass::Validation,
            Error::TapeConsumed
            | Error::NonFiniteGrad { .. }
            | Error::NonFiniteLoss { .. }
            | Error::FileFormat { .. }
            | Error::Numeric(_)
            | Error::Io { .. } => ErrorClass::Runtime,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
