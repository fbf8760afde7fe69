//! Starting points for the majorization loop.
//!
//! Three strategies, in increasing order of effort:
//! - naive: standard-normal configuration, identity transform, zero free rows;
//! - closed form: a one-shot transform estimate by regressing squared
//!   dissimilarities on squared whitened feature differences, then classical
//!   scaling of the residual for the configuration;
//! - complete-rows majorization: run the complete-data solver on the fully
//!   observed rows and fill the rest randomly.
//!
//! All strategies are deterministic in the seed. Free coordinates of the
//! incomplete rows always start at zero.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{InitKind, Partition, Problem, SolverOptions};
use crate::solver::run_complete;
use crate::Result;

/// Relative eigenvalue cutoff for whitening and rank decisions here.
const EIG_TOL: f64 = 1e-12;

/// A starting point. `u0` is N x p in original row order; `v2_tilde0` rows
/// follow [`Partition::incomplete_rows`].
#[derive(Debug, Clone)]
pub struct InitState {
    pub u0: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub v2_tilde0: DMatrix<f64>,
}

/// Builds the starting point selected by `options.init`, seeded by
/// `options.seed`.
pub fn build(problem: &Problem, partition: &Partition, options: &SolverOptions) -> Result<InitState> {
    match options.init {
        InitKind::Naive => Ok(naive_init(problem, partition, options.seed)),
        InitKind::ClosedForm => closed_form_init(problem, partition, options.seed),
        InitKind::CompleteSmacof => complete_smacof_init(problem, partition, options),
    }
}

/// Standard-normal configuration, identity transform, zero free rows.
pub fn naive_init(problem: &Problem, partition: &Partition, seed: u64) -> InitState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = standard_normal_matrix(&mut rng, problem.n(), problem.p);
    InitState {
        u0,
        b0: DMatrix::identity(problem.q(), problem.q()),
        v2_tilde0: DMatrix::zeros(partition.n2, problem.q()),
    }
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Eigendecomposition sorted by descending eigenvalue, with each
/// eigenvector's largest-magnitude entry made positive so the result is a
/// canonical representative.
fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let k = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.cmp(&b))
    });
    let mut values = DVector::zeros(k);
    let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), k);
    for (out, &src) in idx.iter().enumerate() {
        values[out] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).into_owned();
        let mut pivot = 0.0_f64;
        for v in col.iter() {
            if v.abs() > pivot.abs() {
                pivot = *v;
            }
        }
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.column_mut(out).copy_from(&col);
    }
    (values, vectors)
}

/// One-shot starting point from the complete rows.
///
/// The transform estimate whitens the complete conditioning block, regresses
/// squared dissimilarities on the squared whitened coordinate differences
/// over complete pairs (ridge-stabilized, slopes clamped at zero), and maps
/// the square-rooted slopes back through the whitening. The configuration
/// comes from classical scaling of what the transformed features leave
/// unexplained. Incomplete rows get seeded standard-normal coordinates.
pub fn closed_form_init(
    problem: &Problem,
    partition: &Partition,
    seed: u64,
) -> Result<InitState> {
    let n1 = partition.n1;
    let q = problem.q();
    let p = problem.p;
    if n1 < 2 {
        // No pairs to regress on; fall back to the naive start.
        return Ok(naive_init(problem, partition, seed));
    }
    let v1 = partition.v1(problem);

    // Whitening of the centered complete block.
    let means = v1.row_sum() / n1 as f64;
    let centered = &v1 - DMatrix::from_element(n1, 1, 1.0) * &means;
    let cov = centered.transpose() * &centered / (n1 as f64 - 1.0);
    let (cov_vals, cov_vecs) = sorted_symmetric_eigen(&cov);
    let lmax = cov_vals.iter().cloned().fold(0.0_f64, f64::max);
    let mut whiten = cov_vecs.clone();
    for k in 0..q {
        let lam = cov_vals[k];
        let scale = if lam > EIG_TOL * lmax.max(1e-300) && lam > 0.0 {
            lam.powf(-0.5)
        } else {
            0.0
        };
        whiten.column_mut(k).scale_mut(scale);
    }

    // Regression of squared dissimilarities on squared whitened differences
    // over complete pairs, with an intercept absorbing the configuration
    // part of the distances.
    let complete = &partition.order[..n1];
    let dim = q + 1;
    let mut normal: DMatrix<f64> = DMatrix::zeros(dim, dim);
    let mut rhs: DVector<f64> = DVector::zeros(dim);
    let mut x_row: DVector<f64> = DVector::zeros(dim);
    for a in 0..n1 {
        for b in (a + 1)..n1 {
            let d = problem.delta[(complete[a], complete[b])];
            let diff = (v1.row(a) - v1.row(b)).transpose();
            x_row[0] = 1.0;
            for k in 0..q {
                let z = whiten.column(k).dot(&diff);
                x_row[k + 1] = z * z;
            }
            for r in 0..dim {
                for c in 0..dim {
                    normal[(r, c)] += x_row[r] * x_row[c];
                }
                rhs[r] += x_row[r] * d * d;
            }
        }
    }
    let ridge = EIG_TOL * normal.trace();
    for r in 0..dim {
        normal[(r, r)] += ridge;
    }
    let beta = normal
        .lu()
        .solve(&rhs)
        .unwrap_or_else(|| DVector::zeros(dim));

    let mut b0 = whiten.clone();
    for k in 0..q {
        let slope = beta[k + 1].max(0.0);
        b0.column_mut(k).scale_mut(slope.sqrt());
    }

    // Classical scaling of the complete block after removing what the
    // transformed features explain.
    let mut a_mat = DMatrix::zeros(n1, n1);
    for r in 0..n1 {
        for c in 0..n1 {
            let d = problem.delta[(complete[r], complete[c])];
            a_mat[(r, c)] = -0.5 * d * d;
        }
    }
    let vb = &v1 * &b0;
    let resid = a_mat - &vb * vb.transpose();
    let j = DMatrix::identity(n1, n1) - DMatrix::from_element(n1, n1, 1.0 / n1 as f64);
    let gram = &j * resid * &j;
    let (g_vals, g_vecs) = sorted_symmetric_eigen(&gram);
    let mut u_complete = DMatrix::zeros(n1, p);
    for k in 0..p.min(n1) {
        let scale = g_vals[k].max(0.0).sqrt();
        for i in 0..n1 {
            u_complete[(i, k)] = g_vecs[(i, k)] * scale;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u0 = DMatrix::zeros(problem.n(), p);
    for (r, &i) in complete.iter().enumerate() {
        u0.row_mut(i).copy_from(&u_complete.row(r));
    }
    for &i in partition.incomplete_rows() {
        for k in 0..p {
            u0[(i, k)] = rng.sample(StandardNormal);
        }
    }

    Ok(InitState {
        u0,
        b0,
        v2_tilde0: DMatrix::zeros(partition.n2, q),
    })
}

/// Runs the complete-data solver on the fully observed rows to convergence
/// (same gamma and iteration cap as the outer run), keeps its configuration
/// and transform, and fills the incomplete rows with seeded normals.
pub fn complete_smacof_init(
    problem: &Problem,
    partition: &Partition,
    options: &SolverOptions,
) -> Result<InitState> {
    let n1 = partition.n1;
    let q = problem.q();
    let p = problem.p;
    let permuted = partition.permute_problem(problem);
    let sub = Problem {
        delta: permuted.delta.view((0, 0), (n1, n1)).into_owned(),
        weights: permuted.weights.view((0, 0), (n1, n1)).into_owned(),
        conditioning: partition.v1(problem),
        p,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let sub_init = InitState {
        u0: standard_normal_matrix(&mut rng, n1, p),
        b0: DMatrix::identity(q, q),
        v2_tilde0: DMatrix::zeros(0, q),
    };
    let sub_options = SolverOptions {
        restarts: 1,
        force_general_path: false,
        ..options.clone()
    };
    let sol = run_complete(&sub, &sub_init, &sub_options)?;

    let mut u0 = DMatrix::zeros(problem.n(), p);
    for (r, &i) in partition.order[..n1].iter().enumerate() {
        u0.row_mut(i).copy_from(&sol.u.row(r));
    }
    for &i in partition.incomplete_rows() {
        for k in 0..p {
            u0[(i, k)] = rng.sample(StandardNormal);
        }
    }
    Ok(InitState {
        u0,
        b0: sol.b,
        v2_tilde0: DMatrix::zeros(partition.n2, q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::joint_distances;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn problem_from_state(
        u: &DMatrix<f64>,
        v: &DMatrix<f64>,
        b: &DMatrix<f64>,
        missing: &[usize],
        p: usize,
    ) -> Problem {
        let delta = joint_distances(u, &(v * b));
        let mut cond = v.clone();
        for &i in missing {
            for k in 0..v.ncols() {
                cond[(i, k)] = f64::NAN;
            }
        }
        Problem::new(delta, None, cond, p).unwrap()
    }

    #[test]
    fn naive_is_deterministic_and_shaped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = DMatrix::from_fn(6, 2, |_, _| rng.random::<f64>() + 0.1);
        let u = DMatrix::from_fn(6, 2, |i, j| (i + j) as f64 * 0.3);
        let problem = problem_from_state(&u, &v, &DMatrix::identity(2, 2), &[4], 2);
        let partition = Partition::new(&problem);
        let a = naive_init(&problem, &partition, 7);
        let b = naive_init(&problem, &partition, 7);
        assert_eq!(a.u0, b.u0);
        assert_eq!(a.b0, DMatrix::identity(2, 2));
        assert_eq!(a.v2_tilde0, DMatrix::zeros(1, 2));
        let c = naive_init(&problem, &partition, 8);
        assert_ne!(a.u0, c.u0);
    }

    #[test]
    fn closed_form_recovers_single_feature_transform() {
        // Distances generated purely by one conditioning feature: the
        // regression is exact and the residual configuration vanishes.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let v = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() * 3.0);
        let b_true = DMatrix::from_element(1, 1, 1.7);
        let u_zero = DMatrix::zeros(n, 2);
        let problem = problem_from_state(&u_zero, &v, &b_true, &[], 2);
        let partition = Partition::new(&problem);
        let init = closed_form_init(&problem, &partition, 0).unwrap();
        assert_relative_eq!(init.b0[(0, 0)], 1.7, max_relative = 1e-6);
        for i in 0..n {
            for k in 0..2 {
                assert!(
                    init.u0[(i, k)].abs() < 1e-5,
                    "residual configuration should vanish, got {}",
                    init.u0[(i, k)]
                );
            }
        }
    }

    #[test]
    fn closed_form_beats_naive_starting_stress() {
        // The closed-form start is a heuristic; its contract is a much
        // better initial normalized stress than random coordinates when the
        // conditioning features dominate the dissimilarities.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 60;
        let v = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let b_true = DMatrix::from_partial_diagonal(2, 2, &[1.5, 0.5]);
        let u_small = DMatrix::from_fn(n, 1, |_, _| 0.05 * (rng.random::<f64>() - 0.5));
        let problem = problem_from_state(&u_small, &v, &b_true, &[], 1);
        let partition = Partition::new(&problem);

        let stress_at = |init: &InitState| {
            let v_tilde = crate::kernel::embed_conditioning(
                &problem.conditioning,
                &init.b0,
                &init.v2_tilde0,
            );
            crate::kernel::normalized_stress(
                &problem.delta,
                &problem.weights,
                &init.u0,
                &v_tilde,
            )
            .unwrap()
        };
        let smart = stress_at(&closed_form_init(&problem, &partition, 0).unwrap());
        let naive = stress_at(&naive_init(&problem, &partition, 0));
        assert!(
            smart < 0.5 * naive,
            "closed form start {smart} should beat naive {naive}"
        );
        assert!(smart < 0.05, "closed form start too poor: {smart}");
    }

    #[test]
    fn closed_form_clamps_unhelpful_features_to_zero() {
        // Dissimilarities independent of the conditioning: slopes go
        // negative or tiny and must clamp to zero rather than produce NaN.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 10;
        let u = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let v = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
        let problem = problem_from_state(&u, &v, &DMatrix::zeros(1, 1), &[], 2);
        let partition = Partition::new(&problem);
        let init = closed_form_init(&problem, &partition, 0).unwrap();
        assert!(init.b0.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn closed_form_fills_incomplete_rows_deterministically() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 9;
        let v = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let u = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let problem = problem_from_state(&u, &v, &DMatrix::identity(2, 2), &[2, 6], 2);
        let partition = Partition::new(&problem);
        let a = closed_form_init(&problem, &partition, 3).unwrap();
        let b = closed_form_init(&problem, &partition, 3).unwrap();
        assert_eq!(a.u0, b.u0);
        assert_eq!(a.b0, b.b0);
        // Complete rows carry no randomness.
        let c = closed_form_init(&problem, &partition, 4).unwrap();
        assert_eq!(a.u0.row(0), c.u0.row(0));
        assert_ne!(a.u0.row(2), c.u0.row(2));
    }

    #[test]
    fn complete_smacof_start_is_deterministic_and_fits_subproblem() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 10;
        let v = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let u = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() - 0.5);
        let problem = problem_from_state(&u, &v, &DMatrix::identity(2, 2), &[1, 7], 2);
        let partition = Partition::new(&problem);
        let options = SolverOptions {
            seed: 11,
            max_iter: 200,
            ..Default::default()
        };
        let a = complete_smacof_init(&problem, &partition, &options).unwrap();
        let b = complete_smacof_init(&problem, &partition, &options).unwrap();
        assert_eq!(a.u0, b.u0);
        assert_eq!(a.b0, b.b0);
        assert_eq!(a.v2_tilde0, DMatrix::zeros(2, 2));
        assert!(a.b0.iter().all(|x| x.is_finite()));
    }
}
