//! Quality measures for fitted configurations and transforms.
//!
//! - [`acc`]: mean canonical correlation between two configurations, which is
//!   invariant to invertible linear maps of either side (higher is better,
//!   max 1).
//! - [`procrustes_statistic`]: residual after the best rotation and scaling
//!   of one centered configuration onto the other (lower is better, min 0).
//! - [`mse_b`]: squared transform discrepancy after the best left rotation.
//! - [`mse_v`]: plain mean squared error between imputed and true rows.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::Result;

/// Relative eigenvalue cutoff below which a covariance is treated as rank
/// deficient.
const RANK_TOL: f64 = 1e-10;

/// Mean canonical correlation between the column spaces of `x` (N x p) and
/// `y` (N x p_true).
///
/// Whitens each centered side by the inverse square root of its covariance
/// and averages the singular values of the whitened cross-covariance, so the
/// result ignores any invertible linear transformation of either
/// configuration. Needs N > p + p_true and both sides full column rank after
/// centering.
pub fn acc(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(shape_mismatch("second configuration", y, n, y.ncols()));
    }
    let p = x.ncols();
    let pt = y.ncols();
    if n <= p + pt {
        return Err(Error::InvalidArgument(format!(
            "canonical correlations need more rows than total columns, got {n} rows for {p}+{pt} columns"
        )));
    }
    let xc = center(x);
    let yc = center(y);
    let isqrt_x = inv_sqrt_full_rank(&(xc.transpose() * &xc), "first configuration")?;
    let isqrt_y = inv_sqrt_full_rank(&(yc.transpose() * &yc), "second configuration")?;
    let m = isqrt_x * (xc.transpose() * yc) * isqrt_y;
    let sv = m.svd(false, false).singular_values;
    let k = p.min(pt);
    let sum: f64 = sv.iter().take(k).map(|s| s.clamp(0.0, 1.0)).sum();
    Ok(sum / k as f64)
}

/// Procrustes statistic between two N x p configurations: the squared
/// residual of the best rotation-and-scale match of the centered `x` onto
/// the centered `y`, normalized to [0, 1]. Symmetric in its arguments.
pub fn procrustes_statistic(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    if y.nrows() != x.nrows() || y.ncols() != x.ncols() {
        return Err(shape_mismatch("second configuration", y, x.nrows(), x.ncols()));
    }
    if x.nrows() < x.ncols() + 1 {
        return Err(Error::InvalidArgument(format!(
            "procrustes statistic needs at least p+1 rows, got {} for p={}",
            x.nrows(),
            x.ncols()
        )));
    }
    let xc = center(x);
    let yc = center(y);
    let tx = xc.norm_squared();
    let ty = yc.norm_squared();
    if tx == 0.0 || ty == 0.0 {
        return Err(Error::DegenerateConfiguration);
    }
    let sv = (xc.transpose() * yc).svd(false, false).singular_values;
    let cross: f64 = sv.iter().sum();
    Ok((1.0 - cross * cross / (tx * ty)).clamp(0.0, 1.0))
}

/// Squared discrepancy between two q x q transforms after the best
/// orthogonal left rotation of `b_learned`, averaged over the q^2 entries.
pub fn mse_b(b_learned: &DMatrix<f64>, b_true: &DMatrix<f64>) -> Result<f64> {
    let q = b_true.nrows();
    if b_true.ncols() != q {
        return Err(shape_mismatch("true transform", b_true, q, q));
    }
    if b_learned.nrows() != q || b_learned.ncols() != q {
        return Err(shape_mismatch("learned transform", b_learned, q, q));
    }
    let sv = (b_learned * b_true.transpose()).svd(false, false).singular_values;
    let cross: f64 = sv.iter().sum();
    let raw = b_learned.norm_squared() + b_true.norm_squared() - 2.0 * cross;
    Ok(raw.max(0.0) / (q * q) as f64)
}

/// Mean squared error between imputed and true conditioning rows, averaged
/// over all entries. No alignment: the imputation lives in the original
/// feature space.
pub fn mse_v(v2_hat: &DMatrix<f64>, v2_true: &DMatrix<f64>) -> Result<f64> {
    if v2_hat.nrows() != v2_true.nrows() || v2_hat.ncols() != v2_true.ncols() {
        return Err(shape_mismatch(
            "imputed conditioning rows",
            v2_hat,
            v2_true.nrows(),
            v2_true.ncols(),
        ));
    }
    let entries = v2_true.nrows() * v2_true.ncols();
    if entries == 0 {
        return Ok(0.0);
    }
    Ok((v2_hat - v2_true).norm_squared() / entries as f64)
}

fn center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let means = m.row_sum() / m.nrows() as f64;
    m - DMatrix::from_element(m.nrows(), 1, 1.0) * means
}

/// Inverse square root of a symmetric PSD matrix, failing when any
/// eigenvalue falls below `RANK_TOL` relative to the largest.
fn inv_sqrt_full_rank(cov: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let eig = cov.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if lmax <= 0.0 {
        return Err(Error::RankDeficientInput { what });
    }
    let q = eig.eigenvalues.len();
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..q {
        let lam = eig.eigenvalues[k];
        if lam <= RANK_TOL * lmax {
            return Err(Error::RankDeficientInput { what });
        }
        scaled.column_mut(k).scale_mut(lam.powf(-0.5));
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

fn shape_mismatch(what: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Error {
    Error::ShapeMismatch {
        what,
        got_rows: m.nrows(),
        got_cols: m.ncols(),
        want_rows: rows,
        want_cols: cols,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5)
    }

    /// Independent construction of the mean canonical correlation: singular
    /// values of Qx' Qy with Qx, Qy orthonormal bases of the centered
    /// column spaces.
    fn acc_via_orthonormal_bases(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let qx = center(x).qr().q();
        let qy = center(y).qr().q();
        let sv = (qx.transpose() * qy).svd(false, false).singular_values;
        let k = x.ncols().min(y.ncols());
        sv.iter().take(k).map(|s| s.clamp(0.0, 1.0)).sum::<f64>() / k as f64
    }

    #[test]
    fn acc_matches_orthonormal_basis_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 25, 3);
            let y = random_matrix(&mut rng, 25, 2);
            let got = acc(&x, &y).unwrap();
            let want = acc_via_orthonormal_bases(&x, &y);
            assert_relative_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn acc_is_one_under_invertible_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_matrix(&mut rng, 30, 3);
        let t = DMatrix::identity(3, 3) + random_matrix(&mut rng, 3, 3).scale(0.2);
        let shift = DMatrix::from_fn(30, 3, |_, c| c as f64 * 2.0);
        let y = &x * t + shift;
        assert_relative_eq!(acc(&x, &y).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn acc_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 40, 3);
        let y = random_matrix(&mut rng, 40, 3);
        let a = acc(&x, &y).unwrap();
        let b = acc(&y, &x).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn acc_rejects_rank_deficient_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = random_matrix(&mut rng, 20, 3);
        let dup = x.column(0).into_owned();
        x.column_mut(2).copy_from(&dup);
        let y = random_matrix(&mut rng, 20, 2);
        let err = acc(&x, &y).unwrap_err();
        assert!(matches!(
            err,
            Error::RankDeficientInput { what: "first configuration" }
        ));
        let err = acc(&y, &x).unwrap_err();
        assert!(matches!(
            err,
            Error::RankDeficientInput { what: "second configuration" }
        ));
    }

    #[test]
    fn acc_needs_enough_rows() {
        let x = DMatrix::identity(4, 2);
        let y = DMatrix::identity(4, 2);
        assert!(matches!(acc(&x, &y), Err(Error::InvalidArgument(_))));
    }

    /// Residual of the explicit best rotation-and-scale superimposition,
    /// normalized by the centered target's squared norm.
    fn procrustes_via_alignment(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let xc = center(x);
        let yc = center(y);
        let svd = (xc.transpose() * &yc).svd(true, true);
        let rot = svd.u.as_ref().unwrap() * svd.v_t.as_ref().unwrap();
        let cross: f64 = svd.singular_values.iter().sum();
        let scale = cross / xc.norm_squared();
        (xc * rot * scale - &yc).norm_squared() / yc.norm_squared()
    }

    #[test]
    fn procrustes_matches_alignment_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 15, 3);
            let y = random_matrix(&mut rng, 15, 3);
            let got = procrustes_statistic(&x, &y).unwrap();
            let want = procrustes_via_alignment(&x, &y);
            assert_relative_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn procrustes_is_zero_under_similarity_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_matrix(&mut rng, 20, 2);
        // A rotation by 0.7 radians, scaled and shifted.
        let (s, c) = 0.7_f64.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let y = (&x * rot).scale(3.2).add_scalar(1.5);
        assert!(procrustes_statistic(&x, &y).unwrap() < 1e-12);
    }

    #[test]
    fn procrustes_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_matrix(&mut rng, 18, 3);
        let y = random_matrix(&mut rng, 18, 3);
        let a = procrustes_statistic(&x, &y).unwrap();
        let b = procrustes_statistic(&y, &x).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn procrustes_rejects_collapsed_configurations() {
        let x = DMatrix::from_element(5, 2, 3.0);
        let y = DMatrix::identity(5, 2);
        let err = procrustes_statistic(&x, &y).unwrap_err();
        assert!(matches!(err, Error::DegenerateConfiguration));
        assert!(err.is_numeric());
    }

    #[test]
    fn mse_b_ignores_left_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b_true = random_matrix(&mut rng, 3, 3);
        let b_learned = random_matrix(&mut rng, 3, 3);
        // Random rotation from the QR of a random matrix.
        let q = random_matrix(&mut rng, 3, 3).qr().q();
        let base = mse_b(&b_learned, &b_true).unwrap();
        let rotated = mse_b(&(&q * &b_learned), &b_true).unwrap();
        assert_relative_eq!(base, rotated, epsilon = 1e-10);
        // Equal up to a left rotation means zero discrepancy.
        assert!(mse_b(&(&q * &b_true), &b_true).unwrap() < 1e-12);
    }

    #[test]
    fn mse_b_matches_direct_expansion() {
        // Diagonal transforms with positive entries align at the identity,
        // so the discrepancy is the plain squared difference over q^2.
        let a = DMatrix::from_partial_diagonal(2, 2, &[2.0, 1.0]);
        let b = DMatrix::from_partial_diagonal(2, 2, &[1.0, 1.0]);
        assert_relative_eq!(mse_b(&a, &b).unwrap(), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn mse_v_is_the_mean_squared_difference() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.5, 3.0, 3.0]);
        assert_relative_eq!(mse_v(&a, &b).unwrap(), (0.25 + 1.0) / 4.0, epsilon = 1e-15);
        assert!(matches!(
            mse_v(&a, &DMatrix::zeros(3, 2)),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
