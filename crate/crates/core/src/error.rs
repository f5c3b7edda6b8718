//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters (non-positive counts, bad ranges, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A buffer push with a timestamp not after the last stored one.
    #[error("timestamp {new} is not after last stored {last}")]
    NonMonotonicTimestamp { new: f64, last: f64 },

    /// Speed samples do not cover the requested integration interval.
    #[error("speed samples do not cover [{start}, {end}]")]
    PartialCoverage { start: f64, end: f64 },

    /// The pipeline cannot produce output yet (warmup, missing frames).
    #[error("not ready: {0}")]
    NotReady(String),

    /// Caller violated an interface contract (mismatched sizes, zero translation, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed file content (PGM/PFM/JSON parsing).
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
