use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated series did not reach its tolerance within the term cap.
    #[error("series did not converge after {terms} terms (last term ratio {last_ratio:.3e})")]
    Convergence { terms: usize, last_ratio: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("accuracy target missed: error estimate {estimate:.3e} exceeds {limit:.1e}")]
    Accuracy { estimate: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step callback failed at step {step}: {message}")]
    Callback { step: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
