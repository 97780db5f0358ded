use thiserror::Error;

/// Errors produced by the spectral, labelling and rendering routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rational {p}/{q}: {reason}")]
    InvalidRational { p: i64, q: i64, reason: &'static str },

    #[error("coupling constant must be positive and finite, got {0}")]
    InvalidCoupling(f64),

    #[error("invalid gap label (t = {t}, s = {s}): {reason}")]
    InvalidLabel { t: i64, s: i64, reason: &'static str },

    #[error("gap index {r} out of range 1..={max} at theta = {theta}")]
    GapOutOfRange { r: i64, max: i64, theta: String },

    #[error("eigensolver did not converge for matrix of size {size} (residual bound {residual:e})")]
    NotConverged { size: usize, residual: f64 },

    #[error("matrix size {size} exceeds the configured ceiling {max}")]
    TooLarge { size: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite coordinate in polyline {polyline}, point {point}")]
    NonFinite { polyline: usize, point: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
