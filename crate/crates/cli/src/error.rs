//! CLI-level errors and their exit codes.
//!
//! Exit code 2 covers anything wrong with the input: unreadable or malformed
//! files and rejected problem data. Exit code 3 is reserved for numeric
//! failures of a computation on data that passed validation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: cannot read: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot write: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file is empty")]
    EmptyFile { path: String },

    #[error("{path}: cell at row {row}, column {col} (1-based) is neither a number nor NA: {token:?}")]
    UnparsableCell {
        path: String,
        row: usize,
        col: usize,
        token: String,
    },

    #[error("{path}: row {row} (1-based) has {got} cells, expected {want}")]
    RaggedRow {
        path: String,
        row: usize,
        got: usize,
        want: usize,
    },

    #[error("{path}: matrix must be square, got {rows} rows and {cols} columns")]
    NotSquare {
        path: String,
        rows: usize,
        cols: usize,
    },

    #[error("{path}: every row has a missing value, need at least one complete row")]
    AllRowsIncomplete { path: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] condmds::Error),
}

impl CliError {
    /// 3 for numeric failures, 2 for anything wrong with the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}
