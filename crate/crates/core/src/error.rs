use thiserror::Error;

/// Errors raised by graph construction, simulation and experiment orchestration.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A push-sum weight `y_i` collapsed to (or below) zero, which only happens
    /// when the connectivity hypothesis is violated.
    #[error("degenerate state at t={t}: y[{agent}] = {value:e}")]
    Degenerate { t: usize, agent: usize, value: f64 },

    /// Experiment configuration is inconsistent or incomplete.
    #[error("configuration error: {0}")]
    Config(String),

    /// The objective lacks a descriptor the requested operation needs.
    #[error("unsupported objective: {0}")]
    Unsupported(String),

    /// A verification check failed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
