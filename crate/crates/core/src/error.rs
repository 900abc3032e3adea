//! Crate-wide error type.

/// Errors reported by model construction, solvers, and IO.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation
    /// (negative rate, probability off the simplex, empty group, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration file or scenario description is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// The request is well-formed but exceeds a hard resource limit
    /// (e.g. full enumeration of an oversized state space).
    #[error("resource limit: {0}")]
    Resource(String),

    /// A group cannot be served under any considered state, so its
    /// proportional-fair term is unbounded below.
    #[error("group {group} is infeasible: {reason}")]
    Infeasible { group: usize, reason: String },

    /// Malformed tabular input (CSV / pattern / raster files).
    #[error("parse error in {file}: {reason}")]
    Parse { file: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn parse(file: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            reason: reason.into(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
