use thiserror::Error;

use crate::model::sexpr::Span;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },

    #[error("{span}: sort error: {message}")]
    Sort { span: Span, message: String },

    #[error("{span}: duplicate definition of `{name}`")]
    Duplicate { span: Span, name: String },

    #[error("unbound variable `{0}`")]
    Unbound(String),

    #[error("value error: {0}")]
    Value(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("variable count overflow: {0} variables")]
    VarOverflow(u64),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("enumeration cut off at num={num} while expanding node {node}; the abstraction is too large for this budget")]
    NotTotal { node: String, num: usize },

    #[error("no arc {src} -> {dst} in graph")]
    MissingArc { src: String, dst: String },

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),

    #[error("unknown map `{0}`")]
    UnknownMap(String),

    #[error("bound mismatch: {0} vs {1}")]
    BoundMismatch(usize, usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("node {0} is not in the omap (abstraction unsound?)")]
    NodeNotInOmap(String),

    #[error("scope too large: {0}")]
    ScopeTooLarge(String),

    #[error("monitor violation: {0}")]
    Monitor(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed artifact: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(span: Span, message: impl Into<String>) -> Self {
        Error::Syntax {
            span,
            message: message.into(),
        }
    }

    pub fn sort(span: Span, message: impl Into<String>) -> Self {
        Error::Sort {
            span,
            message: message.into(),
        }
    }
}
