//! Problem container, validation, and row partitioning.
//!
//! A [`Problem`] couples an N x N dissimilarity matrix, an N x N weight
//! matrix, an N x q conditioning matrix whose missing entries are `NaN`, and
//! the target dimension p. Construction validates and canonicalizes the data:
//! dissimilarities and weights are symmetrized by averaging, diagonals are
//! zeroed, and the structural assumptions behind the solver (connected weight
//! graph, full-rank conditioning on the complete rows) are checked up front so
//! the update equations never divide by structurally singular matrices.
//!
//! A [`Partition`] reorders rows so that the rows with fully observed
//! conditioning come first. Solvers run in that permuted frame; the partition
//! converts between frames.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::Result;

/// Relative singular-value cutoff for the conditioning rank check.
const RANK_TOL: f64 = 1e-10;

/// A validated conditional scaling problem.
///
/// `delta` and `weights` are symmetric with zero diagonal. `conditioning`
/// holds one row per object; missing entries are `NaN`. `p` is the dimension
/// of the free configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub delta: DMatrix<f64>,
    pub weights: DMatrix<f64>,
    pub conditioning: DMatrix<f64>,
    pub p: usize,
}

impl Problem {
    /// Validates and canonicalizes the inputs. `weights = None` means unit
    /// weights on every off-diagonal pair.
    ///
    /// Checks, in order: shapes, entry domains (finite, non-negative; `NaN`
    /// only in `conditioning`), target dimension, connectivity of the
    /// positive-weight graph, a nonzero weighted dissimilarity sum, and full
    /// column rank of the complete-row conditioning block under the stress
    /// matrix inner product.
    pub fn new(
        delta: DMatrix<f64>,
        weights: Option<DMatrix<f64>>,
        conditioning: DMatrix<f64>,
        p: usize,
    ) -> Result<Self> {
        let n = delta.nrows();
        if delta.ncols() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: delta.ncols(),
            });
        }
        let weights = weights.unwrap_or_else(|| {
            let mut w = DMatrix::from_element(n, n, 1.0);
            w.fill_diagonal(0.0);
            w
        });
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::ShapeMismatch {
                what: "weight matrix",
                got_rows: weights.nrows(),
                got_cols: weights.ncols(),
                want_rows: n,
                want_cols: n,
            });
        }
        if conditioning.nrows() != n {
            return Err(Error::ShapeMismatch {
                what: "conditioning matrix",
                got_rows: conditioning.nrows(),
                got_cols: conditioning.ncols(),
                want_rows: n,
                want_cols: conditioning.ncols().max(1),
            });
        }
        let q = conditioning.ncols();
        if q == 0 {
            return Err(Error::EmptyConditioning);
        }
        if p == 0 || p + 1 > n {
            return Err(Error::TargetDimOutOfRange { p, n });
        }

        for i in 0..n {
            for j in 0..n {
                let d = delta[(i, j)];
                if !d.is_finite() {
                    return Err(Error::NonFinite {
                        what: "dissimilarity matrix",
                        row: i,
                        col: j,
                    });
                }
                if d < 0.0 {
                    return Err(Error::NegativeDissimilarity {
                        row: i,
                        col: j,
                        value: d,
                    });
                }
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::NonFinite {
                        what: "weight matrix",
                        row: i,
                        col: j,
                    });
                }
                if w < 0.0 {
                    return Err(Error::NegativeWeight {
                        row: i,
                        col: j,
                        value: w,
                    });
                }
            }
        }
        for i in 0..n {
            for k in 0..q {
                let v = conditioning[(i, k)];
                if v.is_infinite() {
                    return Err(Error::NonFinite {
                        what: "conditioning matrix",
                        row: i,
                        col: k,
                    });
                }
            }
        }

        let mut delta = symmetrize_avg(&delta);
        let mut weights = symmetrize_avg(&weights);
        delta.fill_diagonal(0.0);
        weights.fill_diagonal(0.0);

        let components = count_components(&weights);
        if components != 1 {
            return Err(Error::DisconnectedWeights { components });
        }

        let mut denom = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                denom += weights[(i, j)] * delta[(i, j)] * delta[(i, j)];
            }
        }
        if denom <= 0.0 {
            return Err(Error::DegenerateDissimilarities);
        }

        let problem = Problem {
            delta,
            weights,
            conditioning,
            p,
        };
        problem.check_conditioning_rank()?;
        Ok(problem)
    }

    pub fn n(&self) -> usize {
        self.delta.nrows()
    }

    pub fn q(&self) -> usize {
        self.conditioning.ncols()
    }

    /// Row indices whose conditioning is fully observed, in original order.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.conditioning.row(i).iter().all(|v| !v.is_nan()))
            .collect()
    }

    /// Rank check of S = V1' H11 V1 over the complete rows, where H11 is the
    /// corresponding block of the stress matrix. The solver's transform
    /// update inverts matrices congruent to S, so rank deficiency here is a
    /// structural failure rather than a numeric one.
    fn check_conditioning_rank(&self) -> Result<()> {
        let q = self.q();
        let complete = self.complete_rows();
        let n1 = complete.len();
        if n1 < q {
            return Err(Error::RankDeficientConditioning {
                rank: n1,
                needed: q,
            });
        }
        let mut v1 = DMatrix::zeros(n1, q);
        for (r, &i) in complete.iter().enumerate() {
            v1.row_mut(r).copy_from(&self.conditioning.row(i));
        }
        // H11 entries from the weights, restricted to complete rows. The
        // diagonal sums over all N rows, not just the complete ones.
        let mut h11 = DMatrix::zeros(n1, n1);
        for (r, &i) in complete.iter().enumerate() {
            for (c, &j) in complete.iter().enumerate() {
                if r != c {
                    h11[(r, c)] = -self.weights[(i, j)];
                }
            }
            let row_sum: f64 = (0..self.n())
                .filter(|&j| j != i)
                .map(|j| self.weights[(i, j)])
                .sum();
            h11[(r, r)] = row_sum;
        }
        let s = v1.transpose() * h11 * &v1;
        let svals = s.svd(false, false).singular_values;
        let smax = svals.iter().cloned().fold(0.0_f64, f64::max);
        let rank = if smax > 0.0 {
            svals.iter().filter(|&&sv| sv > RANK_TOL * smax).count()
        } else {
            0
        };
        if rank < q {
            return Err(Error::RankDeficientConditioning { rank, needed: q });
        }
        Ok(())
    }
}

fn symmetrize_avg(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Number of connected components of the positive-weight graph.
fn count_components(weights: &DMatrix<f64>) -> usize {
    let n = weights.nrows();
    if n == 0 {
        return 0;
    }
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && weights[(i, j)] > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    components
}

/// Weights inversely proportional to the dissimilarities, scaled by the
/// reciprocal of the total dissimilarity over distinct pairs. Pairs flagged
/// in `missing` get zero weight and do not enter the normalization.
pub fn sammon_weights(
    delta: &DMatrix<f64>,
    missing: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let n = delta.nrows();
    let is_missing = |i: usize, j: usize| missing.map(|m| m[(i, j)] != 0.0).unwrap_or(false);
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if is_missing(i, j) {
                continue;
            }
            if delta[(i, j)] <= 0.0 {
                return Err(Error::ZeroDissimilarity { row: i, col: j });
            }
            total += delta[(i, j)];
        }
    }
    if total <= 0.0 {
        return Err(Error::DegenerateDissimilarities);
    }
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && !is_missing(i, j) {
                w[(i, j)] = 1.0 / (delta[(i, j)] * total);
            }
        }
    }
    Ok(w)
}

/// True when every off-diagonal weight equals the same positive constant.
/// The solver then switches to the closed-form factor path.
pub fn has_equal_weights(weights: &DMatrix<f64>) -> bool {
    let n = weights.nrows();
    if n < 2 {
        return true;
    }
    let w0 = weights[(0, 1)];
    if !(w0 > 0.0) {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && weights[(i, j)] != w0 {
                return false;
            }
        }
    }
    true
}

/// Row reordering that puts fully observed conditioning rows first.
///
/// `order[k]` is the original index of permuted row `k`. The first `n1`
/// permuted rows are complete; `mask` is `n2 x q` with 1.0 marking the
/// missing entries of the incomplete rows, in permuted order.
#[derive(Debug, Clone)]
pub struct Partition {
    pub order: Vec<usize>,
    pub n1: usize,
    pub n2: usize,
    pub mask: DMatrix<f64>,
}

impl Partition {
    /// Splits rows by completeness, preserving original order within each
    /// group.
    pub fn new(problem: &Problem) -> Partition {
        let n = problem.n();
        let q = problem.q();
        let complete = problem.complete_rows();
        let incomplete: Vec<usize> = {
            let mut is_complete = vec![false; n];
            for &i in &complete {
                is_complete[i] = true;
            }
            (0..n).filter(|&i| !is_complete[i]).collect()
        };
        let n1 = complete.len();
        let n2 = incomplete.len();
        let mut mask = DMatrix::zeros(n2, q);
        for (r, &i) in incomplete.iter().enumerate() {
            for k in 0..q {
                if problem.conditioning[(i, k)].is_nan() {
                    mask[(r, k)] = 1.0;
                }
            }
        }
        let mut order = complete;
        order.extend_from_slice(&incomplete);
        Partition { order, n1, n2, mask }
    }

    /// Original indices of the incomplete rows, in permuted order.
    pub fn incomplete_rows(&self) -> &[usize] {
        &self.order[self.n1..]
    }

    /// The problem with rows (and matching columns) in permuted order.
    pub fn permute_problem(&self, problem: &Problem) -> Problem {
        Problem {
            delta: self.permute_square(&problem.delta),
            weights: self.permute_square(&problem.weights),
            conditioning: self.permute_rows(&problem.conditioning),
            p: problem.p,
        }
    }

    /// Inverse of [`Partition::permute_problem`].
    pub fn restore_problem(&self, permuted: &Problem) -> Problem {
        Problem {
            delta: self.restore_square(&permuted.delta),
            weights: self.restore_square(&permuted.weights),
            conditioning: self.restore_rows(&permuted.conditioning),
            p: permuted.p,
        }
    }

    pub fn permute_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (k, &i) in self.order.iter().enumerate() {
            out.row_mut(k).copy_from(&m.row(i));
        }
        out
    }

    pub fn restore_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (k, &i) in self.order.iter().enumerate() {
            out.row_mut(i).copy_from(&m.row(k));
        }
        out
    }

    pub fn permute_square(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.order.len();
        let mut out = DMatrix::zeros(n, n);
        for (r, &i) in self.order.iter().enumerate() {
            for (c, &j) in self.order.iter().enumerate() {
                out[(r, c)] = m[(i, j)];
            }
        }
        out
    }

    pub fn restore_square(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.order.len();
        let mut out = DMatrix::zeros(n, n);
        for (r, &i) in self.order.iter().enumerate() {
            for (c, &j) in self.order.iter().enumerate() {
                out[(i, j)] = m[(r, c)];
            }
        }
        out
    }

    /// Complete-row conditioning block, n1 x q, fully observed.
    pub fn v1(&self, problem: &Problem) -> DMatrix<f64> {
        let q = problem.q();
        let mut v1 = DMatrix::zeros(self.n1, q);
        for (r, &i) in self.order[..self.n1].iter().enumerate() {
            v1.row_mut(r).copy_from(&problem.conditioning.row(i));
        }
        v1
    }

    /// Incomplete-row conditioning block, n2 x q, with missing entries
    /// replaced by zero. Pair with [`Partition::mask`](Partition) to tell a
    /// true zero from a hole.
    pub fn v2_observed(&self, problem: &Problem) -> DMatrix<f64> {
        let q = problem.q();
        let mut v2 = DMatrix::zeros(self.n2, q);
        for (r, &i) in self.incomplete_rows().iter().enumerate() {
            for k in 0..q {
                let v = problem.conditioning[(i, k)];
                v2[(r, k)] = if v.is_nan() { 0.0 } else { v };
            }
        }
        v2
    }
}

/// Starting-point strategy for the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Random configuration, identity transform.
    Naive,
    /// Regression-based transform estimate plus classical scaling.
    ClosedForm,
    /// Majorization on the complete rows only, then random fill.
    CompleteSmacof,
}

/// Solver controls. `gamma` is the stop threshold on the per-iteration drop
/// of normalized stress; `seed` feeds every random draw, with restart r
/// using `seed + r`.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub gamma: f64,
    pub max_iter: usize,
    pub init: InitKind,
    pub restarts: usize,
    pub seed: u64,
    pub force_general_path: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gamma: 1e-6,
            max_iter: 1000,
            init: InitKind::ClosedForm,
            restarts: 1,
            seed: 0,
            force_general_path: false,
        }
    }
}

/// A fitted model. `u` is in original row order; `v2_tilde` rows correspond
/// to [`Partition::incomplete_rows`]. `stress_trace[0]` is the normalized
/// stress of the starting point, followed by one entry per iteration.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub v2_tilde: DMatrix<f64>,
    pub normalized_stress: f64,
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}
