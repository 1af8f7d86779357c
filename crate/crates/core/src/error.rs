use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid argument, shape or configuration.
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrated state became non-finite or left the overflow guard.
    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// An operation was called on input that does not meet its precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Analytic and finite-difference Jacobians disagree.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("unknown example `{name}` (known: {})", known.join(", "))]
    UnknownExample { name: String, known: Vec<String> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
