use thiserror::Error;

/// Errors raised by model construction, parsing and the simulation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model inconsistency: {0}")]
    Model(String),

    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("reaction `{0}` is not enabled in the current state")]
    NotEnabled(String),

    #[error("invalid abstraction parameter c = {0}; expected 1 < c <= 2")]
    PartitionParameter(f64),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
