//! Error taxonomy shared across the crate.
//!
//! Errors split into two families: data validation failures (malformed or
//! degenerate inputs) and numeric failures (ill-conditioned or diverging
//! computations on inputs that passed validation). [`Error::is_numeric`]
//! distinguishes them so callers can map the families to distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dissimilarity matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{what} has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        what: &'static str,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("conditioning matrix must have at least one column")]
    EmptyConditioning,

    #[error("target dimension p={p} must satisfy 1 <= p <= N-1 with N={n}")]
    TargetDimOutOfRange { p: usize, n: usize },

    #[error("negative dissimilarity {value} at ({row}, {col})")]
    NegativeDissimilarity { row: usize, col: usize, value: f64 },

    #[error("negative weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },

    #[error("non-finite entry in {what} at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("zero dissimilarity between distinct objects {row} and {col} forbids Sammon weighting")]
    ZeroDissimilarity { row: usize, col: usize },

    #[error("weight graph is disconnected ({components} components)")]
    DisconnectedWeights { components: usize },

    #[error("conditioning features of the complete rows are rank deficient (rank {rank}, need {needed})")]
    RankDeficientConditioning { rank: usize, needed: usize },

    #[error("all weighted dissimilarities are zero, normalized stress is undefined")]
    DegenerateDissimilarities,

    #[error("shifted stress matrix H + 11' is singular")]
    SingularShiftedH,

    #[error("{what} is ill-conditioned (rcond {rcond:.3e})")]
    IllConditioned { what: &'static str, rcond: f64 },

    #[error("normalized stress rose from {previous} to {current} at iteration {iteration}")]
    NonMonotoneStress {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("{what} does not have full column rank")]
    RankDeficientInput { what: &'static str },

    #[error("fitted transform is singular, missing values cannot be recovered")]
    SingularTransform,

    #[error("configuration collapses to a point after centering")]
    DegenerateConfiguration,

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numeric computation itself, as opposed to
    /// rejection of the input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularShiftedH
                | Error::IllConditioned { .. }
                | Error::NonMonotoneStress { .. }
                | Error::RankDeficientInput { .. }
                | Error::SingularTransform
                | Error::DegenerateConfiguration
        )
    }
}
