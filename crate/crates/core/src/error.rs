use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs of the wrong size, or functions over different base sets.
    #[error("input shape: {0}")]
    Shape(String),

    /// A value violates a structural invariant (non-monotone truth table,
    /// comparable antichain elements, non-bijective permutation).
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("capability limit: {what} supports {limit}")]
    Capability { what: &'static str, limit: String },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("dataset integrity: {0}")]
    Integrity(String),

    #[error("lookup: {0}")]
    Lookup(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn capability(what: &'static str, limit: impl Into<String>) -> Self {
        Error::Capability {
            what,
            limit: limit.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
