//! Recovery of missing conditioning values from a fitted transform.
//!
//! After a fit, each incomplete row i has free embedded coordinates
//! `v2_tilde[i]` living in the transformed feature space. Mapping them back
//! through the inverse transform yields estimates for the missing entries;
//! observed entries are kept verbatim. With `M` the missing-entry mask
//! (1 = missing) and `V2o` the observations with missing positions zeroed:
//!
//! ```text
//! V2_hat = V2o + ([(V2_tilde - V2o B) o M] B^-1) o M
//! ```
//!
//! where `o` is the entrywise product. For a fully missing row this reduces
//! to `v2_tilde B^-1`; for observed entries the correction is masked out, so
//! they survive bit-for-bit.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::kernel::rcond_1norm;
use crate::Result;

/// Reconstructed conditioning rows. `preserved` flags the entries copied
/// verbatim from the observations (the complement of the missing mask).
#[derive(Debug, Clone)]
pub struct ImputedConditioning {
    pub v2_hat: DMatrix<f64>,
    pub preserved: DMatrix<f64>,
}

/// Fills the missing entries of the incomplete conditioning rows.
///
/// `v2_observed` holds the incomplete rows with arbitrary values (ignored)
/// at missing positions, `mask` is 1.0 where an entry is missing and 0.0
/// where it is observed, `v2_tilde` holds the fitted free coordinates for
/// the same rows, and `b` is the fitted transform. Fails with
/// [`Error::SingularTransform`] when `b` cannot be inverted reliably.
pub fn impute(
    v2_observed: &DMatrix<f64>,
    mask: &DMatrix<f64>,
    v2_tilde: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<ImputedConditioning> {
    let n2 = v2_observed.nrows();
    let q = v2_observed.ncols();
    check_shape("missing-entry mask", mask, n2, q)?;
    check_shape("embedded incomplete rows", v2_tilde, n2, q)?;
    check_shape("transform", b, q, q)?;
    for (idx, m) in mask.iter().enumerate() {
        if *m != 0.0 && *m != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "mask entries must be 0 or 1, got {m} at flat index {idx}"
            )));
        }
    }

    let b_inv = b.clone().try_inverse().ok_or(Error::SingularTransform)?;
    if rcond_1norm(b, &b_inv) < crate::kernel::RCOND_MIN {
        return Err(Error::SingularTransform);
    }

    // Observed entries with missing positions zeroed; explicit loop so NaN
    // placeholders in masked cells cannot leak through a product with zero.
    let mut observed = DMatrix::zeros(n2, q);
    for i in 0..n2 {
        for k in 0..q {
            if mask[(i, k)] == 0.0 {
                observed[(i, k)] = v2_observed[(i, k)];
            }
        }
    }

    let gap = (v2_tilde - &observed * b).component_mul(mask);
    let fill = (gap * b_inv).component_mul(mask);
    let mut v2_hat = observed;
    for i in 0..n2 {
        for k in 0..q {
            if mask[(i, k)] == 1.0 {
                v2_hat[(i, k)] = fill[(i, k)];
            }
        }
    }

    Ok(ImputedConditioning {
        v2_hat,
        preserved: mask.map(|m| 1.0 - m),
    })
}

fn check_shape(what: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::ShapeMismatch {
            what,
            got_rows: m.nrows(),
            got_cols: m.ncols(),
            want_rows: rows,
            want_cols: cols,
        });
    }
    Ok(())
}
