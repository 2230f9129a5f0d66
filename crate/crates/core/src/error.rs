//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid interval: lo {lo} > hi {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("side length {0} admits no band (need R >= 4)")]
    SideTooSmall(f64),

    #[error("certificate requires a layered band family: {0}")]
    NotCertifiable(String),

    #[error("configuration parameter out of range: {0}")]
    BadConfig(String),

    #[error("raster geometry mismatch: {0}")]
    RasterMismatch(String),

    #[error("need at least {need} resolvable scales, found {found}")]
    InsufficientScales { need: usize, found: usize },

    #[error("set extends outside the allowed region: {0}")]
    OutOfRegion(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
