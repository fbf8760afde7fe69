//! General-path majorization solver for arbitrary non-negative weights.
//!
//! Each iteration rebuilds the coefficient matrix C at the current state and
//! applies three simultaneous update maps, all driven by matrices factored
//! once per run and kept in a [`FactorCache`]:
//!
//! - configuration:   U  <- H+ C U
//! - transform:       B  <- Kb^{-1} V1' [(C11 - H12 H22^{-1} C21) V1 B
//!                                      + (C12 - H12 H22^{-1} C22) V2~]
//! - free rows:       V2~ <- Kv2^{-1} [(C21 - G V1' C11) V1 B
//!                                      + (C22 - G V1' C12) V2~]
//!
//! with S = V1' H11 V1, G = H21 V1 S^{-1}, Kb = S - V1' H12 H22^{-1} H21 V1,
//! and Kv2 = H22 - G V1' H12. The maps never increase the stress, which the
//! driver loop also enforces at runtime.
//!
//! Everything here operates in the permuted frame of a [`Partition`]
//! (complete rows first); [`run_missing`] restores original row order in the
//! returned [`Solution`].

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;

use crate::error::Error;
use crate::fastpath;
use crate::init::{self, InitState};
use crate::kernel::{
    build_c, build_h, checked_inverse, embed_conditioning, joint_distances, rcond_1norm,
    stress_from_distances, weighted_delta_sq, CoefficientMatrix, StressMatrices, RCOND_MIN,
};
use crate::model::{has_equal_weights, Partition, Problem, Solution, SolverOptions};
use crate::Result;

/// Stress increases beyond this are treated as numeric failure.
const MONOTONE_GUARD: f64 = 1e-10;

/// Per-run factors of the update maps. All inverses are materialized after an
/// rcond check, so the per-iteration work is matrix products only.
#[derive(Debug, Clone)]
pub struct FactorCache {
    /// Pseudoinverse of the full stress matrix, N x N.
    pub h_pinv: DMatrix<f64>,
    /// H12 H22^{-1}, N1 x N2.
    pub h12_h22inv: DMatrix<f64>,
    /// Kb^{-1} V1', q x N1.
    pub kb_inv_v1t: DMatrix<f64>,
    /// G V1' = H21 V1 S^{-1} V1', N2 x N1.
    pub g_v1t: DMatrix<f64>,
    /// Kv2^{-1}, N2 x N2.
    pub kv2_inv: DMatrix<f64>,
    /// S = V1' H11 V1, q x q.
    pub s: DMatrix<f64>,
}

/// Factors the update-map matrices for one run. `v1` is the complete-row
/// conditioning block; `sm` must be built with the same `n1`.
pub fn precompute(v1: &DMatrix<f64>, sm: &StressMatrices) -> Result<FactorCache> {
    let n = sm.h.nrows();
    let n1 = sm.n1;
    let n2 = n - n1;
    let q = v1.ncols();
    debug_assert_eq!(v1.nrows(), n1);

    let h11 = sm.h11();
    let s = v1.transpose() * &h11 * v1;
    let s_inv = checked_inverse(&s, "conditioning quadratic form")?;

    let (h12_h22inv, g_v1t, kb, kv2) = if n2 > 0 {
        let h12 = sm.h12();
        let h21 = sm.h21();
        let h22 = sm.h22();
        // H22 is the grounded block of a connected-graph stress matrix, so it
        // is positive definite; Cholesky doubles as the definiteness check.
        let chol = Cholesky::new(h22.clone()).ok_or(Error::IllConditioned {
            what: "incomplete-block stress matrix",
            rcond: 0.0,
        })?;
        let h22_inv = chol.inverse();
        let rcond = rcond_1norm(&h22, &h22_inv);
        if rcond < RCOND_MIN {
            return Err(Error::IllConditioned {
                what: "incomplete-block stress matrix",
                rcond,
            });
        }
        let h12_h22inv = &h12 * &h22_inv;
        let g_v1t = &h21 * v1 * &s_inv * v1.transpose();
        let kb = &s - v1.transpose() * &h12_h22inv * &h21 * v1;
        let kv2 = &h22 - &g_v1t * &h12;
        (h12_h22inv, g_v1t, kb, kv2)
    } else {
        (
            DMatrix::zeros(n1, 0),
            DMatrix::zeros(0, n1),
            s.clone(),
            DMatrix::zeros(0, 0),
        )
    };

    let kb_inv = checked_inverse(&kb, "transform update matrix")?;
    let kb_inv_v1t = kb_inv * v1.transpose();
    let kv2_inv = if n2 > 0 {
        checked_inverse(&kv2, "free-coordinate update matrix")?
    } else {
        DMatrix::zeros(0, 0)
    };
    debug_assert_eq!(kb_inv_v1t.nrows(), q);

    Ok(FactorCache {
        h_pinv: sm.h_pinv.clone(),
        h12_h22inv,
        kb_inv_v1t,
        g_v1t,
        kv2_inv,
        s,
    })
}

/// Configuration update U <- H+ (C U).
pub fn update_u(
    cache: &FactorCache,
    cm: &CoefficientMatrix,
    u_prev: &DMatrix<f64>,
) -> DMatrix<f64> {
    &cache.h_pinv * (&cm.c * u_prev)
}

/// Transform update from the previous iterate of both B and V2~.
pub fn update_b(
    cache: &FactorCache,
    cm: &CoefficientMatrix,
    v1: &DMatrix<f64>,
    b_prev: &DMatrix<f64>,
    v2t_prev: &DMatrix<f64>,
) -> DMatrix<f64> {
    let a11 = cm.c11() - &cache.h12_h22inv * cm.c21();
    let a12 = cm.c12() - &cache.h12_h22inv * cm.c22();
    let bracket = a11 * (v1 * b_prev) + a12 * v2t_prev;
    &cache.kb_inv_v1t * bracket
}

/// Free-coordinate update from the previous iterate of both B and V2~.
pub fn update_v2(
    cache: &FactorCache,
    cm: &CoefficientMatrix,
    v1: &DMatrix<f64>,
    b_prev: &DMatrix<f64>,
    v2t_prev: &DMatrix<f64>,
) -> DMatrix<f64> {
    let a21 = cm.c21() - &cache.g_v1t * cm.c11();
    let a22 = cm.c22() - &cache.g_v1t * cm.c12();
    let bracket = a21 * (v1 * b_prev) + a22 * v2t_prev;
    &cache.kv2_inv * bracket
}

/// One-iteration view shared by the driver loop and the equivalence and
/// timing tests.
pub(crate) trait Stepper {
    fn sigma_n(&self) -> f64;
    fn step(&mut self) -> f64;
}

/// General-path iteration state in the permuted frame.
pub struct GeneralStepper {
    delta: DMatrix<f64>,
    weights: DMatrix<f64>,
    v1: DMatrix<f64>,
    n1: usize,
    cache: FactorCache,
    u: DMatrix<f64>,
    b: DMatrix<f64>,
    v2t: DMatrix<f64>,
    dist: DMatrix<f64>,
    sigma_n: f64,
    denom: f64,
}

impl GeneralStepper {
    /// Builds a stepper from a problem in original order; rows are permuted
    /// internally, and all state accessors report the permuted frame.
    pub fn new(problem: &Problem, partition: &Partition, init: &InitState) -> Result<Self> {
        let permuted = partition.permute_problem(problem);
        let v1 = partition.v1(problem);
        let u0 = partition.permute_rows(&init.u0);
        Self::from_parts(
            permuted.delta,
            permuted.weights,
            v1,
            u0,
            init.b0.clone(),
            init.v2_tilde0.clone(),
        )
    }

    /// Builds a stepper directly from permuted-frame matrices: `delta` and
    /// `weights` with the `v1.nrows()` complete rows first, `u0` in the same
    /// row order.
    pub fn from_parts(
        delta: DMatrix<f64>,
        weights: DMatrix<f64>,
        v1: DMatrix<f64>,
        u0: DMatrix<f64>,
        b0: DMatrix<f64>,
        v2t0: DMatrix<f64>,
    ) -> Result<Self> {
        let n1 = v1.nrows();
        let sm = build_h(&weights, n1)?;
        let cache = precompute(&v1, &sm)?;
        let denom = weighted_delta_sq(&delta, &weights);
        if denom <= 0.0 {
            return Err(Error::DegenerateDissimilarities);
        }
        let vt = embed_conditioning(&v1, &b0, &v2t0);
        let dist = joint_distances(&u0, &vt);
        let sigma_n = stress_from_distances(&delta, &weights, &dist) / denom;
        Ok(GeneralStepper {
            delta,
            weights,
            v1,
            n1,
            cache,
            u: u0,
            b: b0,
            v2t: v2t0,
            dist,
            sigma_n,
            denom,
        })
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
        let cm = build_c(&self.delta, &self.weights, &self.dist, self.n1);
        let u_new = update_u(&self.cache, &cm, &self.u);
        let b_new = update_b(&self.cache, &cm, &self.v1, &self.b, &self.v2t);
        let v2_new = update_v2(&self.cache, &cm, &self.v1, &self.b, &self.v2t);
        self.u = u_new;
        self.b = b_new;
        self.v2t = v2_new;
        let vt = embed_conditioning(&self.v1, &self.b, &self.v2t);
        self.dist = joint_distances(&self.u, &vt);
        self.sigma_n = stress_from_distances(&self.delta, &self.weights, &self.dist) / self.denom;
        self.sigma_n
    }
}

impl Stepper for GeneralStepper {
    fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    fn step(&mut self) -> f64 {
        self.advance()
    }
}

/// Complete-data iteration state: every conditioning row is observed, so the
/// transform update collapses to B <- (V' H V)^{-1} V' C V B.
pub struct CompleteStepper {
    delta: DMatrix<f64>,
    weights: DMatrix<f64>,
    v: DMatrix<f64>,
    h_pinv: DMatrix<f64>,
    vhv_inv: DMatrix<f64>,
    u: DMatrix<f64>,
    b: DMatrix<f64>,
    dist: DMatrix<f64>,
    sigma_n: f64,
    denom: f64,
}

impl CompleteStepper {
    pub fn from_parts(
        delta: DMatrix<f64>,
        weights: DMatrix<f64>,
        v: DMatrix<f64>,
        u0: DMatrix<f64>,
        b0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = v.nrows();
        let sm = build_h(&weights, n)?;
        let vhv = v.transpose() * &sm.h * &v;
        let vhv_inv = checked_inverse(&vhv, "conditioning quadratic form")?;
        let denom = weighted_delta_sq(&delta, &weights);
        if denom <= 0.0 {
            return Err(Error::DegenerateDissimilarities);
        }
        let vt = &v * &b0;
        let dist = joint_distances(&u0, &vt);
        let sigma_n = stress_from_distances(&delta, &weights, &dist) / denom;
        Ok(CompleteStepper {
            delta,
            weights,
            v,
            h_pinv: sm.h_pinv,
            vhv_inv,
            u: u0,
            b: b0,
            dist,
            sigma_n,
            denom,
        })
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn normalized_stress(&self) -> f64 {
        self.sigma_n
    }

    pub fn advance(&mut self) -> f64 {
        let cm = build_c(&self.delta, &self.weights, &self.dist, self.v.nrows());
        let u_new = &self.h_pinv * (&cm.c * &self.u);
        let b_new = &self.vhv_inv * (self.v.transpose() * (&cm.c * (&self.v * &self.b)));
        self.u = u_new;
        self.b = b_new;
        let vt = &self.v * &self.b;
        self.dist = joint_distances(&self.u, &vt);
        self.sigma_n = stress_from_distances(&self.delta, &self.weights, &self.dist) / self.denom;
        self.sigma_n
    }
}

impl Stepper for CompleteStepper {
    fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    fn step(&mut self) -> f64 {
        self.advance()
    }
}

/// Runs the stop rule: iterate while the drop in normalized stress exceeds
/// `gamma` and fewer than `max_iter` sweeps have run. Returns the stress
/// trace (starting point first), the sweep count, and whether the stress
/// criterion fired. A stress increase beyond the monotonicity guard aborts.
pub(crate) fn drive<S: Stepper>(
    stepper: &mut S,
    options: &SolverOptions,
) -> Result<(Vec<f64>, usize, bool)> {
    let mut trace = vec![stepper.sigma_n()];
    let mut prev = f64::INFINITY;
    let mut curr = trace[0];
    let mut iterations = 0;
    while iterations < options.max_iter && prev - curr > options.gamma {
        let next = stepper.step();
        iterations += 1;
        if next > curr + MONOTONE_GUARD {
            return Err(Error::NonMonotoneStress {
                iteration: iterations,
                previous: curr,
                current: next,
            });
        }
        trace.push(next);
        prev = curr;
        curr = next;
    }
    let converged = prev - curr <= options.gamma;
    Ok((trace, iterations, converged))
}

/// Fits a problem with incomplete conditioning rows along the general path.
/// Delegates to [`run_complete`] when nothing is missing.
pub fn run_missing(
    problem: &Problem,
    partition: &Partition,
    init: &InitState,
    options: &SolverOptions,
) -> Result<Solution> {
    if partition.n2 == 0 {
        return run_complete(problem, init, options);
    }
    let mut stepper = GeneralStepper::new(problem, partition, init)?;
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

/// Fits a fully observed problem. The conditioning matrix must have no
/// missing entries.
pub fn run_complete(
    problem: &Problem,
    init: &InitState,
    options: &SolverOptions,
) -> Result<Solution> {
    let n = problem.n();
    if problem.complete_rows().len() != n {
        return Err(Error::InvalidArgument(
            "complete-data solver requires fully observed conditioning".into(),
        ));
    }
    let mut stepper = CompleteStepper::from_parts(
        problem.delta.clone(),
        problem.weights.clone(),
        problem.conditioning.clone(),
        init.u0.clone(),
        init.b0.clone(),
    )?;
    let (trace, iterations, converged) = drive(&mut stepper, options)?;
    Ok(Solution {
        u: stepper.u().clone(),
        b: stepper.b().clone(),
        v2_tilde: DMatrix::zeros(0, problem.q()),
        normalized_stress: *trace.last().unwrap(),
        stress_trace: trace,
        iterations,
        converged,
    })
}

/// Multi-start driver and path dispatcher. Restart r runs with seed
/// `options.seed + r`; the best final stress wins, ties going to the lowest
/// restart index. Equal weights route to the closed-form factor path unless
/// `force_general_path` is set.
pub fn run_multistart(
    problem: &Problem,
    partition: &Partition,
    options: &SolverOptions,
) -> Result<Solution> {
    let restarts = options.restarts.max(1);
    let runs: Vec<Result<Solution>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut opts = options.clone();
            opts.seed = options.seed + r as u64;
            let init = init::build(problem, partition, &opts)?;
            dispatch(problem, partition, &init, &opts)
        })
        .collect();

    let mut best: Option<Solution> = None;
    let mut first_err: Option<Error> = None;
    for run in runs {
        match run {
            Ok(sol) => {
                let better = best
                    .as_ref()
                    .map(|b| sol.normalized_stress < b.normalized_stress)
                    .unwrap_or(true);
                if better {
                    best = Some(sol);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some(sol) => Ok(sol),
        None => Err(first_err.expect("at least one restart ran")),
    }
}

/// Chooses the solver path for one start.
pub fn dispatch(
    problem: &Problem,
    partition: &Partition,
    init: &InitState,
    options: &SolverOptions,
) -> Result<Solution> {
    if partition.n2 == 0 {
        run_complete(problem, init, options)
    } else if has_equal_weights(&problem.weights) && !options.force_general_path {
        fastpath::run_equal(problem, partition, init, options)
    } else {
        run_missing(problem, partition, init, options)
    }
}
