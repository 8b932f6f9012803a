use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Physically invalid input, e.g. a non-positive power.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape error: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("shape error: {0}")]
    EmptyInput(&'static str),

    #[error("empty map")]
    EmptyMap,

    #[error("capacity error: requested {requested}, only {available} available")]
    Capacity { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("schema error at line {line}: {message}")]
    Schema { line: u64, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },

    #[error("null violation at line {line}: column {column} is empty")]
    NullViolation { line: u64, column: String },

    #[error("storage error: {0}")]
    Storage(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
