use super::ast::Span;
use super::value::{Kind, Timestamp};

/// Errors raised while parsing, checking or compiling a monitor program.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: undefined identifier `{name}`")]
    Undefined { span: Span, name: String },
    #[error("{span}: kind mismatch: {msg}")]
    KindMismatch { span: Span, msg: String },
    #[error("{span}: duplicate stream name `{name}`")]
    Duplicate { span: Span, name: String },
    #[error("{span}: `{builtin}` takes {expected} argument(s), got {found}")]
    Arity { span: Span, builtin: String, expected: usize, found: usize },
    #[error("{span}: `default` needs a constant second argument")]
    NotConstant { span: Span },
    #[error("illegal cycle through `{name}` (only `last` may close a cycle)")]
    IllegalCycle { name: String },
    #[error("`{name}` is not a constant definition")]
    NotAConstant { name: String },
}

/// Errors raised while feeding events to a compiled monitor.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown input stream `{0}`")]
    UnknownStream(String),
    #[error("event on `{stream}` at {t} is not after {prev}")]
    TimestampRegression { stream: String, t: Timestamp, prev: Timestamp },
    #[error("stream `{stream}` expects {expected}, got {found}")]
    KindMismatch { stream: String, expected: Kind, found: Kind },
    #[error("internal kind error at node {node}")]
    Internal { node: usize },
}
