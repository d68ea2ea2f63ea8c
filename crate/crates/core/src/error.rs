use thiserror::Error;

/// Errors produced by the lattice toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A lattice parameter or operation argument is outside its admitted range.
    #[error("invalid `{key}`: {reason}")]
    Domain { key: &'static str, reason: String },

    /// An operation was called without the data it requires.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical routine failed (non-convergence, singular basis, ...).
    #[error("computation failed for {context}: {reason}")]
    Computation { context: String, reason: String },
}

impl Error {
    pub(crate) fn domain(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            key,
            reason: reason.into(),
        }
    }

    pub(crate) fn computation(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Computation {
            context: context.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
