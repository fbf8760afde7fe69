//! Closed-form factor path for equal weights.
//!
//! With every off-diagonal weight equal, H = N I - 11' and each factor of the
//! general path collapses to a rank-one correction of a q x q matrix:
//!
//! - H+            = (1/N)(I - 11'/N)
//! - H12 H22^{-1}  = -(1/N1) 1
//! - S             = N V1'V1 - v1s v1s'
//! - Kb            = N V1'V1 - (N/N1) v1s v1s'
//! - G V1'         = -1 (v1s' S^{-1} V1')
//! - Kv2^{-1}      = (1/N)(I + g/(N - g N2) 11'),  g = 1 + v1s' S^{-1} v1s
//!
//! where v1s is the column-sum vector of V1. No matrix larger than q x q is
//! ever inverted, and each iteration costs O(N^2 (p + q)) like the stress
//! evaluation itself. Up to floating-point error the iterates coincide with
//! the general path's; weights are normalized to one internally since the
//! iteration is invariant to a common positive weight scale.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::Error;
use crate::init::InitState;
use crate::kernel::{
    checked_inverse, embed_conditioning, joint_distance, weighted_delta_sq, CoefficientMatrix,
    RCOND_MIN,
};
use crate::model::{has_equal_weights, Partition, Problem, Solution, SolverOptions};
use crate::solver::{drive, Stepper};
use crate::Result;

/// Rank-one closed forms of the equal-weight update factors.
#[derive(Debug, Clone)]
pub struct EqualWeightCache {
    /// Column sums of V1, length q.
    pub v1s: DVector<f64>,
    /// S^{-1}, q x q.
    pub s_inv: DMatrix<f64>,
    /// Kb^{-1} V1', q x N1.
    pub kb_inv_v1t: DMatrix<f64>,
    /// v1s' S^{-1} V1', 1 x N1; the negated row profile of G V1'.
    pub v1s_sinv_v1t: RowDVector<f64>,
    /// g = 1 + v1s' S^{-1} v1s.
    pub g_scalar: f64,
    n: usize,
    n2: usize,
}

impl EqualWeightCache {
    /// Column-centering coefficient g / (N (N - g N2)) applied after the
    /// free-coordinate map.
    pub fn v2_centering_coeff(&self) -> f64 {
        self.g_scalar / (self.n as f64 * (self.n as f64 - self.g_scalar * self.n2 as f64))
    }
}

/// Builds the equal-weight factors from the complete-row conditioning block.
/// `n` is the total row count, `n2` the number of incomplete rows.
pub fn equal_weight_factors(v1: &DMatrix<f64>, n: usize, n2: usize) -> Result<EqualWeightCache> {
    let n1 = v1.nrows();
    debug_assert_eq!(n1 + n2, n);
    let q = v1.ncols();
    let nf = n as f64;
    let n1f = n1 as f64;

    let v1s: DVector<f64> = v1.row_sum().transpose();
    let gram = v1.transpose() * v1;
    let gram_inv = checked_inverse(&gram, "conditioning Gram matrix")?;
    let av = &gram_inv * &v1s;
    let t = v1s.dot(&av);

    // Sherman-Morrison denominators; both vanish exactly when the constant
    // vector lies in the column space of V1.
    let denom_s = nf - t;
    if denom_s.abs() < RCOND_MIN * nf {
        return Err(Error::IllConditioned {
            what: "conditioning quadratic form",
            rcond: denom_s.abs() / nf,
        });
    }
    let denom_b = n1f - t;
    if denom_b.abs() < RCOND_MIN * nf {
        return Err(Error::IllConditioned {
            what: "transform update matrix",
            rcond: denom_b.abs() / nf,
        });
    }

    let identity = DMatrix::identity(q, q);
    let s_inv = (&identity + (&av * v1s.transpose()) / denom_s) * &gram_inv / nf;
    let kb_inv = (&identity + (&av * v1s.transpose()) / denom_b) * &gram_inv / nf;
    let kb_inv_v1t = kb_inv * v1.transpose();

    let sv = &s_inv * &v1s;
    let v1s_sinv_v1t: RowDVector<f64> = sv.transpose() * v1.transpose();
    let g_scalar = 1.0 + v1s.dot(&sv);

    let center_denom = nf - g_scalar * n2 as f64;
    if center_denom.abs() < RCOND_MIN * nf {
        return Err(Error::IllConditioned {
            what: "free-coordinate update matrix",
            rcond: center_denom.abs() / nf,
        });
    }

    Ok(EqualWeightCache {
        v1s,
        s_inv,
        kb_inv_v1t,
        v1s_sinv_v1t,
        g_scalar,
        n,
        n2,
    })
}

fn ones(rows: usize) -> DMatrix<f64> {
    DMatrix::from_element(rows, 1, 1.0)
}

/// Configuration update: scale by 1/N, then remove column means.
pub fn update_u_equal(cm: &CoefficientMatrix, u_prev: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let ua = (&cm.c * u_prev) / nf;
    let col_means = ua.row_sum() / nf;
    ua - ones(n) * col_means
}

/// Transform update with the incomplete-block coupling folded into column
/// sums of C21 and C22.
pub fn update_b_equal(
    cache: &EqualWeightCache,
    cm: &CoefficientMatrix,
    v1: &DMatrix<f64>,
    b_prev: &DMatrix<f64>,
    v2t_prev: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n1 = v1.nrows();
    let n2 = cm.c.nrows() - n1;
    let n1f = n1 as f64;
    let vb = v1 * b_prev;
    let c21_colsums = cm.c.view((n1, 0), (n2, n1)).row_sum();
    let c22_colsums = cm.c.view((n1, n1), (n2, n2)).row_sum();
    let t1 = cm.c.view((0, 0), (n1, n1)) * &vb + ones(n1) * ((c21_colsums * &vb) / n1f);
    let t2 =
        cm.c.view((0, n1), (n1, n2)) * v2t_prev + ones(n1) * ((c22_colsums * v2t_prev) / n1f);
    &cache.kb_inv_v1t * (t1 + t2)
}

/// Free-coordinate update: rank-one coupling through v1s' S^{-1} V1',
/// then the closed-form Kv2^{-1} as a scale plus column-sum correction.
pub fn update_v2_equal(
    cache: &EqualWeightCache,
    cm: &CoefficientMatrix,
    v1: &DMatrix<f64>,
    b_prev: &DMatrix<f64>,
    v2t_prev: &DMatrix<f64>,
    n: usize,
) -> DMatrix<f64> {
    let n2 = v2t_prev.nrows();
    let n1 = v1.nrows();
    let nf = n as f64;
    let vb = v1 * b_prev;
    let r1 = &cache.v1s_sinv_v1t * cm.c.view((0, 0), (n1, n1));
    let r2 = &cache.v1s_sinv_v1t * cm.c.view((0, n1), (n1, n2));
    let t1 = cm.c.view((n1, 0), (n2, n1)) * &vb + ones(n2) * (r1 * &vb);
    let t2 = cm.c.view((n1, n1), (n2, n2)) * v2t_prev + ones(n2) * (r2 * v2t_prev);
    let va = t1 + t2;
    let correction = ones(n2) * (va.row_sum() * cache.v2_centering_coeff());
    va / nf + correction
}

/// Equal-weight iteration state in the permuted frame. Weights are taken to
/// be one on every distinct pair.
pub struct EqualStepper {
    delta: DMatrix<f64>,
    v1: DMatrix<f64>,
    n: usize,
    cache: EqualWeightCache,
    u: DMatrix<f64>,
    b: DMatrix<f64>,
    v2t: DMatrix<f64>,
    c: CoefficientMatrix,
    sigma_n: f64,
    denom: f64,
}

impl EqualStepper {
    /// Builds a stepper from a problem in original order. Fails unless all
    /// off-diagonal weights are equal.
    pub fn new(problem: &Problem, partition: &Partition, init: &InitState) -> Result<Self> {
        if !has_equal_weights(&problem.weights) {
            return Err(Error::InvalidArgument(
                "equal-weight path requires a constant off-diagonal weight".into(),
            ));
        }
        let permuted = partition.permute_problem(problem);
        let v1 = partition.v1(problem);
        let u0 = partition.permute_rows(&init.u0);
        Self::from_parts(
            permuted.delta,
            v1,
            u0,
            init.b0.clone(),
            init.v2_tilde0.clone(),
        )
    }

    /// Builds a stepper from permuted-frame matrices, treating every
    /// off-diagonal weight as one.
    pub fn from_parts(
        delta: DMatrix<f64>,
        v1: DMatrix<f64>,
        u0: DMatrix<f64>,
        b0: DMatrix<f64>,
        v2t0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = delta.nrows();
        let n1 = v1.nrows();
        let n2 = n - n1;
        let cache = equal_weight_factors(&v1, n, n2)?;
        let mut unit_weights = DMatrix::from_element(n, n, 1.0);
        unit_weights.fill_diagonal(0.0);
        let denom = weighted_delta_sq(&delta, &unit_weights);
        if denom <= 0.0 {
            return Err(Error::DegenerateDissimilarities);
        }
        let mut stepper = EqualStepper {
            delta,
            v1,
            n,
            cache,
            u: u0,
            b: b0,
            v2t: v2t0,
            c: CoefficientMatrix {
                c: DMatrix::zeros(n, n),
                n1,
            },
            sigma_n: 0.0,
            denom,
        };
        stepper.refresh();
        Ok(stepper)
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn v2_tilde(&self) -> &DMatrix<f64> {
        &self.v2t
    }

    pub fn normalized_stress(&self) -> f64 {
        self.sigma_n
    }

    /// Applies one majorization sweep and returns the new normalized stress.
    pub fn advance(&mut self) -> f64 {
        let u_new = update_u_equal(&self.c, &self.u, self.n);
        let b_new = update_b_equal(&self.cache, &self.c, &self.v1, &self.b, &self.v2t);
        let v2_new = update_v2_equal(&self.cache, &self.c, &self.v1, &self.b, &self.v2t, self.n);
        self.u = u_new;
        self.b = b_new;
        self.v2t = v2_new;
        self.refresh();
        self.sigma_n
    }

    /// One pass over the distinct pairs of the current state: accumulates
    /// the stress and fills the majorization matrix for the next sweep, so
    /// distances are never materialized and delta is read once. Requires a
    /// symmetric delta, which `new` guarantees via problem validation.
    fn refresh(&mut self) {
        let vt = embed_conditioning(&self.v1, &self.b, &self.v2t);
        let n = self.n;
        let c = &mut self.c.c;
        let mut sigma = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = joint_distance(&self.u, &vt, i, j);
                let delta_ij = self.delta[(i, j)];
                let r = delta_ij - d;
                sigma += r * r;
                let value = if d != 0.0 { -delta_ij / d } else { 0.0 };
                c[(i, j)] = value;
                c[(j, i)] = value;
            }
        }
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if j != i {
                    row_sum += c[(i, j)];
                }
            }
            c[(i, i)] = -row_sum;
        }
        self.sigma_n = sigma / self.denom;
    }
}

impl Stepper for EqualStepper {
    fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    fn step(&mut self) -> f64 {
        self.advance()
    }
}

/// Fits an equal-weight problem along the closed-form factor path.
pub fn run_equal(
    problem: &Problem,
    partition: &Partition,
    init: &InitState,
    options: &SolverOptions,
) -> Result<Solution> {
    let mut stepper = EqualStepper::new(problem, partition, init)?;
    let (trace, iterations, converged) = drive(&mut stepper, options)?;
    Ok(Solution {
        u: partition.restore_rows(stepper.u()),
        b: stepper.b().clone(),
        v2_tilde: stepper.v2_tilde().clone(),
        normalized_stress: *trace.last().unwrap(),
        stress_trace: trace,
        iterations,
        converged,
    })
}
