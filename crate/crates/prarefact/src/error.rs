//! Crate-wide error type.

use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("CFL violation: dt = {dt:e} exceeds stable bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite field value at step {step}, t = {t}")]
    NonFinite { step: usize, t: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive value: {0}")]
    NonpositiveValue(String),

    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config validation: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
