use thiserror::Error;

/// Errors surfaced by the library. Variants carry enough position
/// information for a CLI to print actionable messages; `kind()` buckets
/// them into the coarse classes callers use for exit codes.
#[derive(Debug, Error)]
pub enum IpdcError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file contains no data rows")]
    EmptyCsv { path: String },

    #[error("{path}: line {line} has {got} fields, expected {expected}")]
    RaggedRow {
        path: String,
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("{path}: line {line}, column {col}: {value:?} is not a finite number")]
    BadCell {
        path: String,
        line: usize,
        col: usize,
        value: String,
    },

    #[error("x has {x_rows} rows but y has {y_rows}")]
    RowCountMismatch { x_rows: usize, y_rows: usize },

    #[error("need at least {min} observations, got {n}")]
    TooFewRows { n: usize, min: usize },

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("{path}: {message}")]
    Json { path: String, message: String },
}

/// Coarse classification used by the CLI to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad flags or option combinations.
    Config,
    /// Unreadable, malformed, or inconsistent input data.
    Data,
    /// A numerical routine failed to converge.
    NonConvergence,
}

impl IpdcError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            IpdcError::Config(_) => ErrorKind::Config,
            IpdcError::NonConvergence(_) => ErrorKind::NonConvergence,
            _ => ErrorKind::Data,
        }
    }
}
