//! Stress evaluation and the two matrices driving the majorization updates.
//!
//! Joint distances combine the free configuration `U` with the embedded
//! conditioning coordinates `V-tilde`: d_ij^2 = |u_i - u_j|^2 + |v_i - v_j|^2.
//! The stress matrix `H` depends only on the weights and is fixed for a run;
//! the coefficient matrix `C` is rebuilt every iteration from the current
//! distances. Both have zero row sums, so the constant vector is always in
//! their null space and `H` is inverted through a rank-one shift.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::Result;

/// Relative reciprocal-condition cutoff applied at every inversion site.
pub(crate) const RCOND_MIN: f64 = 1e-12;

/// 1-norm reciprocal condition estimate from a matrix and its inverse.
pub(crate) fn rcond_1norm(a: &DMatrix<f64>, a_inv: &DMatrix<f64>) -> f64 {
    let na = one_norm(a);
    let ni = one_norm(a_inv);
    if na == 0.0 || ni == 0.0 {
        return 0.0;
    }
    1.0 / (na * ni)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Inverts a square matrix, failing with `IllConditioned` below the rcond
/// cutoff. `what` names the inversion site in the error.
pub(crate) fn checked_inverse(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let inv = a
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { what, rcond: 0.0 })?;
    let rcond = rcond_1norm(a, &inv);
    if rcond < RCOND_MIN {
        return Err(Error::IllConditioned { what, rcond });
    }
    Ok(inv)
}

/// Stacks the transformed complete rows over the free incomplete rows:
/// `[v1 * b; v2_tilde]`, giving one embedded conditioning row per object.
pub fn embed_conditioning(
    v1: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v2_tilde: &DMatrix<f64>,
) -> DMatrix<f64> {
    let q = b.ncols();
    let n1 = v1.nrows();
    let n2 = v2_tilde.nrows();
    let mut out = DMatrix::zeros(n1 + n2, q);
    out.view_mut((0, 0), (n1, q)).copy_from(&(v1 * b));
    out.view_mut((n1, 0), (n2, q)).copy_from(v2_tilde);
    out
}

/// Distance between objects i and j through both coordinate blocks.
#[inline]
pub fn joint_distance(
    u: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
    i: usize,
    j: usize,
) -> f64 {
    let mut s = 0.0;
    for k in 0..u.ncols() {
        let d = u[(i, k)] - u[(j, k)];
        s += d * d;
    }
    for k in 0..v_tilde.ncols() {
        let d = v_tilde[(i, k)] - v_tilde[(j, k)];
        s += d * d;
    }
    s.sqrt()
}

/// All pairwise joint distances as a symmetric matrix with zero diagonal.
pub fn joint_distances(u: &DMatrix<f64>, v_tilde: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = joint_distance(u, v_tilde, i, j);
            d[(i, j)] = dij;
            d[(j, i)] = dij;
        }
    }
    d
}

/// Weighted squared-residual stress over distinct pairs.
pub fn conditional_stress(
    delta: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    u: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
) -> f64 {
    let n = delta.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = delta[(i, j)] - joint_distance(u, v_tilde, i, j);
            s += weights[(i, j)] * r * r;
        }
    }
    s
}

/// Stress evaluated from precomputed pairwise distances.
pub fn stress_from_distances(
    delta: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    dist: &DMatrix<f64>,
) -> f64 {
    let n = delta.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = delta[(i, j)] - dist[(i, j)];
            s += weights[(i, j)] * r * r;
        }
    }
    s
}

/// Sum of weighted squared dissimilarities over distinct pairs, the
/// normalization constant of [`normalized_stress`].
pub fn weighted_delta_sq(delta: &DMatrix<f64>, weights: &DMatrix<f64>) -> f64 {
    let n = delta.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += weights[(i, j)] * delta[(i, j)] * delta[(i, j)];
        }
    }
    s
}

/// Stress divided by the weighted squared dissimilarity total, making runs
/// comparable across scales.
pub fn normalized_stress(
    delta: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    u: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
) -> Result<f64> {
    let denom = weighted_delta_sq(delta, weights);
    if denom <= 0.0 {
        return Err(Error::DegenerateDissimilarities);
    }
    Ok(conditional_stress(delta, weights, u, v_tilde) / denom)
}

/// The weight-derived quadratic form of the stress and its pseudoinverse,
/// split at row n1 into complete/incomplete blocks.
#[derive(Debug, Clone)]
pub struct StressMatrices {
    pub h: DMatrix<f64>,
    pub h_pinv: DMatrix<f64>,
    pub n1: usize,
}

impl StressMatrices {
    pub fn h11(&self) -> DMatrix<f64> {
        self.h.view((0, 0), (self.n1, self.n1)).into_owned()
    }

    pub fn h12(&self) -> DMatrix<f64> {
        let n2 = self.h.nrows() - self.n1;
        self.h.view((0, self.n1), (self.n1, n2)).into_owned()
    }

    pub fn h21(&self) -> DMatrix<f64> {
        let n2 = self.h.nrows() - self.n1;
        self.h.view((self.n1, 0), (n2, self.n1)).into_owned()
    }

    pub fn h22(&self) -> DMatrix<f64> {
        let n2 = self.h.nrows() - self.n1;
        self.h.view((self.n1, self.n1), (n2, n2)).into_owned()
    }
}

/// Builds H (off-diagonal -w_ij, diagonal row sums of w) and its
/// Moore-Penrose pseudoinverse via the shift identity
/// H+ = (H + 11')^{-1} - 11'/N^2, valid because the null space of H on a
/// connected weight graph is exactly the constant vector.
pub fn build_h(weights: &DMatrix<f64>, n1: usize) -> Result<StressMatrices> {
    let n = weights.nrows();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                h[(i, j)] = -weights[(i, j)];
                row_sum += weights[(i, j)];
            }
        }
        h[(i, i)] = row_sum;
    }
    let shifted = &h + DMatrix::from_element(n, n, 1.0);
    let shifted_inv = shifted
        .clone()
        .try_inverse()
        .ok_or(Error::SingularShiftedH)?;
    if rcond_1norm(&shifted, &shifted_inv) < RCOND_MIN {
        return Err(Error::SingularShiftedH);
    }
    let n_sq = (n * n) as f64;
    let h_pinv = shifted_inv - DMatrix::from_element(n, n, 1.0 / n_sq);
    Ok(StressMatrices { h, h_pinv, n1 })
}

/// Majorization coefficient matrix at the current distances. Off-diagonal
/// entries are -w_ij delta_ij / d_ij, zero where d_ij vanishes; diagonals
/// make every row sum to zero.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    pub c: DMatrix<f64>,
    pub n1: usize,
}

impl CoefficientMatrix {
    pub fn c11(&self) -> DMatrix<f64> {
        self.c.view((0, 0), (self.n1, self.n1)).into_owned()
    }

    pub fn c12(&self) -> DMatrix<f64> {
        let n2 = self.c.nrows() - self.n1;
        self.c.view((0, self.n1), (self.n1, n2)).into_owned()
    }

    pub fn c21(&self) -> DMatrix<f64> {
        let n2 = self.c.nrows() - self.n1;
        self.c.view((self.n1, 0), (n2, self.n1)).into_owned()
    }

    pub fn c22(&self) -> DMatrix<f64> {
        let n2 = self.c.nrows() - self.n1;
        self.c.view((self.n1, self.n1), (n2, n2)).into_owned()
    }
}

/// Builds C from precomputed joint distances `dist`.
pub fn build_c(
    delta: &DMatrix<f64>,
    weights: &DMatrix<f64>,
    dist: &DMatrix<f64>,
    n1: usize,
) -> CoefficientMatrix {
    let n = delta.nrows();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = dist[(i, j)];
            let value = if d != 0.0 {
                -weights[(i, j)] * delta[(i, j)] / d
            } else {
                0.0
            };
            c[(i, j)] = value;
            row_sum += value;
        }
        c[(i, i)] = -row_sum;
    }
    CoefficientMatrix { c, n1 }
}
