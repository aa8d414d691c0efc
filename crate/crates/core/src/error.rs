//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or scenario field.
    #[error("config error: {0}")]
    Config(String),

    /// Config file could not be parsed.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("IO error: {0}")]
    Io(#[from] std::io::Error),

    /// An argument fell outside its documented domain.
    #[error("range error: {0}")]
    Range(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The leading eigenvalue of the coupling matrix vanishes.
    #[error("degenerate source: leading eigenvalue is zero")]
    DegenerateSource,

    /// Guard against exponent overflow in squeezing factors.
    #[error("overflow guard: {0}")]
    Overflow(String),

    /// A covariance failed the positive-definiteness / conditioning guard.
    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    /// Total mixture weight vanished or went negative during heralding.
    #[error("unphysical heralding: total weight is not positive")]
    UnphysicalHeralding,

    /// A pixel row had (numerically) no support under the LO envelope.
    #[error("empty pixel: LO envelope vanishes on pixel {0}")]
    EmptyPixel(usize),

    #[error("party count mismatch: expected {expected}, got {got}")]
    PartyCount { expected: usize, got: usize },

    /// The orthant integrator could not reach the requested accuracy.
    /// Carries the best estimate and its error bound.
    #[error("accuracy target unreachable: best estimate {estimate} ± {error}")]
    Accuracy { estimate: f64, error: f64 },
}

impl Error {
    /// Process exit code for the CLI: 1 for usage/config problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Range(_)
            | Error::DimensionMismatch(_)
            | Error::PartyCount { .. } => 1,
            Error::DegenerateSource
            | Error::Overflow(_)
            | Error::SingularCovariance(_)
            | Error::UnphysicalHeralding
            | Error::EmptyPixel(_)
            | Error::Accuracy { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
