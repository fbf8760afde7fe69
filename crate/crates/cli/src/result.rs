//! JSON schema of a fit written by the `fit` command.
//!
//! Matrices serialize as row-major nested arrays. Values round-trip
//! losslessly: serde_json prints the shortest decimal that parses back to
//! the same float.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a fit produced. Row order of `embedding` matches the input
/// files; `embedded_incomplete` and `imputed` rows follow `incomplete_rows`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    /// N x p fitted configuration, input row order.
    pub embedding: Vec<Vec<f64>>,
    /// q x q fitted transform of the conditioning features.
    pub transform: Vec<Vec<f64>>,
    /// Original indices (0-based) of rows with missing conditioning values.
    pub incomplete_rows: Vec<usize>,
    /// Free embedded coordinates fitted for those rows, one row each.
    pub embedded_incomplete: Vec<Vec<f64>>,
    /// Conditioning rows with missing entries filled, one row per
    /// incomplete row; null when the transform was too close to singular
    /// to invert.
    pub imputed: Option<Vec<Vec<f64>>>,
    pub normalized_stress: f64,
    /// Normalized stress per iteration; entry 0 is the starting point.
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub options: OptionsEcho,
}

/// The settings the fit actually ran with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptionsEcho {
    pub p: usize,
    pub gamma: f64,
    pub max_iter: usize,
    pub init: String,
    pub restarts: usize,
    pub force_general_path: bool,
    /// "unit", "file", or "sammon".
    pub weighting: String,
    /// "avg" or "sum".
    pub symmetrize: String,
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Invalid(format!("{what}: rows differ in length")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let result = FitResult {
            embedding: vec![vec![1.0 / 3.0, 0.1], vec![f64::MIN_POSITIVE, 1e300]],
            transform: vec![vec![std::f64::consts::PI]],
            incomplete_rows: vec![1],
            embedded_incomplete: vec![vec![-0.1234567890123456789]],
            imputed: None,
            normalized_stress: 1e-17,
            stress_trace: vec![0.5, 1e-17],
            iterations: 1,
            converged: true,
            seed: 42,
            options: OptionsEcho {
                p: 2,
                gamma: 1e-6,
                max_iter: 1000,
                init: "closed-form".into(),
                restarts: 1,
                force_general_path: false,
                weighting: "unit".into(),
                symmetrize: "avg".into(),
            },
        };
        let text = serde_json::to_string_pretty(&result).unwrap();
        let back: FitResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back.embedding, result.embedding);
        assert_eq!(back.embedded_incomplete, result.embedded_incomplete);
        assert_eq!(back.normalized_stress, result.normalized_stress);
        assert_eq!(back.stress_trace, result.stress_trace);
        // Serialization is deterministic.
        assert_eq!(text, serde_json::to_string_pretty(&back).unwrap());
    }

    #[test]
    fn matrix_conversion_round_trips() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let rows = matrix_to_rows(&m);
        assert_eq!(rows, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(rows_to_matrix(&rows, "m").unwrap(), m);
        assert!(rows_to_matrix(&[vec![1.0], vec![1.0, 2.0]], "m").is_err());
    }
}
