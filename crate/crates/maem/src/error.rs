//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// A configuration problem: an invalid, unknown, or ill-typed key.
///
/// Carries the offending key so CLI users can find the line to fix.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error: {key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    /// Every agent is at zero wealth, so no growth share can be formed.
    #[error("degenerate state at t = {time}: all agents hold zero wealth")]
    DegenerateState { time: u64 },

    /// Rank correlation is undefined when the rank variance is zero.
    #[error("rank correlation undefined: fewer than two agents")]
    UndefinedCorrelation,

    /// A fit was requested with too few usable points.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 for config errors, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
