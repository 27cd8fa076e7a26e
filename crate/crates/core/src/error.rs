use thiserror::Error;

use crate::engine::SimOutput;

/// Errors raised by the model, statistics and configuration layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient history: need {needed} prices, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    /// The price left the representable range; `partial` holds everything recorded before.
    #[error("numeric overflow at step {step}: price {price}")]
    NumericOverflow {
        step: u64,
        price: f64,
        partial: Box<SimOutput>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
