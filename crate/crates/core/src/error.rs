use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: tag `{tag}` is not valid under the {scheme} scheme")]
    Tag {
        line: usize,
        tag: String,
        scheme: &'static str,
    },
    #[error("record {record}, layer {layer}: {message}")]
    Validation {
        record: usize,
        layer: usize,
        message: String,
    },
    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },
    #[error("unknown label `{0}`")]
    Label(String),
    #[error("non-finite value at coordinate {index}")]
    NonFinite { index: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch} (lr {learning_rate})")]
    Diverged {
        epoch: usize,
        batch: usize,
        learning_rate: f64,
    },
    #[error("sentence {index}: {message}")]
    Data { index: usize, message: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn shape_err(context: &'static str, expected: impl Into<String>, actual: impl Into<String>) -> Error {
    Error::Shape {
        context,
        expected: expected.into(),
        actual: actual.into(),
    }
}
