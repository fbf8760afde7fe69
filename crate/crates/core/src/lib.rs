//! Conditional multidimensional scaling with incomplete conditioning features.
//!
//! Given pairwise dissimilarities between N objects and a conditioning matrix
//! of q known features per object (possibly with missing entries), this crate
//! fits a low-dimensional configuration `U`, a linear transform `B` of the
//! conditioning features, and free embedded coordinates for the rows whose
//! conditioning values are missing. The fit minimizes a weighted stress over
//! joint distances that combine both coordinate blocks, via iterative
//! majorization. Missing conditioning values can afterwards be imputed from
//! the fitted transform.
//!
//! Modules:
//! - [`model`]: problem container, validation, row partitioning, options.
//! - [`kernel`]: stress, joint distances, and the H / C matrix builders.
//! - [`solver`]: general-path majorization (arbitrary weights).
//! - [`fastpath`]: closed-form factor path for equal weights.
//! - [`init`]: starting-point strategies.
//! - [`impute`]: recovery of missing conditioning values from a fit.
//! - [`metrics`]: configuration and transform quality measures.
//! - [`simbench`]: synthetic product-rating generator and benchmark harness.

pub mod error;
pub mod fastpath;
pub mod impute;
pub mod init;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod simbench;
pub mod solver;

pub use error::Error;
pub use impute::{impute, ImputedConditioning};
pub use init::InitState;
pub use kernel::{CoefficientMatrix, StressMatrices};
pub use model::{InitKind, Partition, Problem, Solution, SolverOptions};
pub use solver::run_multistart;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
