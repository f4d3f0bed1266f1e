use std::io;

use thiserror::Error;

/// Errors raised anywhere in the extraction/classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed input. `line` is 1-based when known.
    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },

    /// CoNLL block does not match its encoded sentence.
    #[error("alignment error in sentence {sentence}: {message}")]
    Alignment { sentence: usize, message: String },

    /// Inconsistent data (dangling or duplicated references).
    #[error("data error: {0}")]
    Data(String),

    #[error("graph error: cycle through node {node}")]
    Cycle { node: usize },

    #[error("graph error: head {head} of node {node} outside [0, {len}]")]
    HeadRange { node: usize, head: usize, len: usize },

    #[error("graph error: expected exactly one root, found {count}")]
    RootCount { count: usize },

    #[error("path error: {0}")]
    Path(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("model version mismatch: expected `{expected}`, found `{found}`")]
    Version { expected: String, found: String },

    #[error("non-finite gradient in {0}")]
    NonFinite(String),

    #[error("gradient check failed: {failures} of {checked} parameters exceed tolerance (worst {worst:.3e})")]
    GradientCheck {
        checked: usize,
        failures: usize,
        worst: f64,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(line: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        Error::Format {
            line: line.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
