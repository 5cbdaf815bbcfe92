use thiserror::Error;

use crate::tree::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed arguments: unknown ids, out-of-range parameters, bad shapes.
    #[error("input error: {0}")]
    Input(String),
    /// Label domains do not line up the way the operation requires.
    #[error("agreement error: {0}")]
    Agreement(String),
    /// A required embedding or correspondence is missing.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// The chosen pivot cannot absorb the member being relabeled.
    #[error("pivot error: {0}")]
    Pivot(String),
    /// The tree breaks one or more merge tree rules.
    #[error("invalid merge tree: {}", summarize(.0))]
    InvalidTree(Vec<Violation>),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn agreement(msg: impl Into<String>) -> Self {
        Error::Agreement(msg.into())
    }

    pub(crate) fn configuration(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Agreement(_) => "agreement",
            Error::Configuration(_) => "configuration",
            Error::Pivot(_) => "pivot",
            Error::InvalidTree(_) => "invalid_tree",
        }
    }
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
