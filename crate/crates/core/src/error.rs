use std::path::PathBuf;

use thiserror::Error;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Io,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system in {0}")]
    Singular(&'static str),

    #[error("power iteration did not converge in {iterations} iterations (last estimate {last_estimate})")]
    NonConvergence {
        iterations: usize,
        last_estimate: f64,
        last_iterate: Vec<f64>,
    },

    #[error("degenerate selection: all selection weights are zero")]
    DegenerateSelection,

    #[error("{0}: every pixel has a zero-norm spectrum")]
    AllZeroPixels(&'static str),

    #[error("singular value decomposition failed in {0}")]
    Svd(&'static str),

    #[error("non-finite iterate at stage {stage}")]
    NumericStage { stage: usize },

    #[error("unsafe step size at stage {stage}: eta * |phi|^2 = {gain} exceeds 2")]
    UnsafeStepSize { stage: usize, gain: f64 },

    #[error("iterate diverged at stage {stage}: norm grew {growth:.3}x over the reference")]
    Diverged { stage: usize, growth: f64 },

    #[error("bad magic in cube file: expected \"HSC1\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("truncated cube file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("cube file has {extra} trailing bytes after the payload")]
    TrailingBytes { extra: u64 },

    #[error("cube dimensions overflow: {b} x {h} x {w}")]
    DimensionOverflow { b: u32, h: u32, w: u32 },

    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::TrailingBytes { .. }
            | Error::DimensionOverflow { .. }
            | Error::Csv { .. } => ErrorClass::Io,
            Error::InvalidArgument(_) | Error::Dimension { .. } => ErrorClass::Usage,
            _ => ErrorClass::Numeric,
        }
    }

    pub(crate) fn dims(
        context: &'static str,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
