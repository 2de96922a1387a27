use thiserror::Error;

use crate::lp::LpStatus;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid rational `{0}`")]
    ParseRational(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("conditional undefined: every generator gives {0} probability zero")]
    UndefinedConditional(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("optimal face is unbounded")]
    UnboundedFace,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("linear program ended with status {0:?}")]
    NotOptimal(LpStatus),
    #[error("corpus case `{case}`: {message}")]
    Corpus { case: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
