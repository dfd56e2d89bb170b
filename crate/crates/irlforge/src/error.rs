//! Error type shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong dimensions.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// A numeric quantity left the finite range.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// An operation was asked for something it cannot do.
    #[error("{0}")]
    Invalid(String),

    /// Replay buffer holds fewer transitions than the requested batch.
    #[error("replay buffer underfull: have {have}, need {need}")]
    BufferUnderfull { have: usize, need: usize },

    /// The induced Markov chain is not unichain (or the linear system is singular).
    #[error("degenerate chain in {context}: {detail}")]
    DegenerateChain { context: String, detail: String },

    /// The scripted gait controller failed to settle into a limit cycle.
    #[error("gait failed to reach a period-1 limit cycle within {hops} hops: {diagnostics}")]
    NoLimitCycle { hops: usize, diagnostics: String },

    /// Configuration file problems, with a line number when known.
    #[error("config-parse: {0}")]
    Config(String),

    /// Checkpoint/manifest validation failures.
    #[error("artifact: {0}")]
    Artifact(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// One-line machine-parsable form used by the CLI on stderr.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::NonFinite(_) => "non-finite",
            Error::Invalid(_) => "invalid",
            Error::BufferUnderfull { .. } => "buffer-underfull",
            Error::DegenerateChain { .. } => "degenerate-chain",
            Error::NoLimitCycle { .. } => "no-limit-cycle",
            Error::Config(_) => "config-parse",
            Error::Artifact(_) => "artifact",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
