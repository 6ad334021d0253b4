use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("degenerate normalization: v({t}) = {v}")]
    DegenerateScale { t: f64, v: f64 },

    #[error("degenerate projection direction: variance {0}")]
    DegenerateDirection(f64),

    /// Numerical procedure failed; `estimate` carries the best value reached.
    #[error("numerical failure: {message}")]
    Numeric { message: String, estimate: Option<f64> },

    /// An invariant that should hold by construction was violated.
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
