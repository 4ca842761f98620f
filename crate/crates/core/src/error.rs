use thiserror::Error;

/// Errors raised by the evaluation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("{op}: argument out of domain: {msg}")]
    Domain { op: &'static str, msg: String },

    /// The operation was called in a way its contract does not allow.
    #[error("{op}: {msg}")]
    Usage { op: &'static str, msg: String },

    /// An iterative procedure ran out of budget before meeting its tolerance.
    #[error("{op}: no convergence: {msg}")]
    NonConvergence { op: &'static str, msg: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn usage(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Usage {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn non_convergence(op: &'static str, msg: impl Into<String>) -> Self {
        Error::NonConvergence {
            op,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
