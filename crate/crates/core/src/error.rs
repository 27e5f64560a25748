use thiserror::Error;

/// Errors raised anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition or invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A membership query landed on the curve itself.
    #[error("point ({x}, {y}) lies within {distance:e} of the curve")]
    AmbiguousPoint { x: f64, y: f64, distance: f64 },

    /// A probe was evaluated at (or too close to) its singularity.
    #[error("singularity: {0}")]
    Singularity(String),

    /// The boundary integral system could not be solved.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Classification accepted no test domain.
    #[error("no test domain was accepted: {0}")]
    EmptyAccepted(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
