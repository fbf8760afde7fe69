//! Synthetic product-rating generator and benchmark harness.
//!
//! Objects are products rated on seven features drawn uniformly on [0, 1].
//! Dissimilarities are weighted Euclidean distances over all seven features,
//! optionally corrupted by multiplicative-scale Gaussian noise. Afterwards
//! each feature value gets its own proportional noise. The first four noisy
//! features become the conditioning matrix with a fraction of rows fully
//! masked; the last three are the latent part a fitted configuration should
//! recover.
//!
//! [`run_benchmark`] fits three contenders per replicate and reports medians
//! per missing-data ratio:
//! - the full model started from random coordinates,
//! - the full model started from a complete-rows fit,
//! - a complete-rows-only fit that discards the incomplete rows (scored on
//!   the rows it kept; it cannot impute, so it has no imputation error).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::Error;
use crate::impute::impute;
use crate::metrics::{acc, mse_b, mse_v, procrustes_statistic};
use crate::model::{InitKind, Partition, Problem, SolverOptions};
use crate::solver::run_multistart;
use crate::Result;

/// Number of rated features per product.
pub const N_FEATURES: usize = 7;
/// Leading features that act as conditioning variables.
pub const N_CONDITIONING: usize = 4;
/// Trailing features the configuration should recover.
pub const N_TARGET: usize = N_FEATURES - N_CONDITIONING;

/// Published importance scores for the seven features, normalized to sum
/// to one.
pub const CONSUMER_REPORTS_SCORES: [f64; N_FEATURES] =
    [90.0, 88.0, 83.0, 82.0, 81.0, 70.0, 68.0];

/// How feature weights are chosen for a replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// The fixed published importance scores.
    ConsumerReports,
    /// Seven draws from U(3, 7), normalized. Every normalized weight lies
    /// in [1/15, 7/25].
    RandomUniform,
}

/// Generator and benchmark settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Number of products.
    pub n: usize,
    /// Fraction of rows with complete conditioning features.
    pub n1_ratio: f64,
    /// Dissimilarity noise scale, as a fraction of each distance.
    pub zeta1: f64,
    /// Feature noise scale, as a fraction of each value's magnitude.
    pub zeta2: f64,
    pub weight_mode: WeightMode,
    /// Replicates per cell of the benchmark.
    pub replicates: usize,
    /// Base seed; replicate r uses seed + r.
    pub seed: u64,
    /// Draw dissimilarity noise per ordered pair and average the two
    /// directions, instead of one draw per unordered pair.
    pub ordered_pair_noise: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 100,
            n1_ratio: 0.5,
            zeta1: 0.2,
            zeta2: 0.05,
            weight_mode: WeightMode::ConsumerReports,
            replicates: 100,
            seed: 0,
            ordered_pair_noise: false,
        }
    }
}

/// One generated instance plus its ground truth.
#[derive(Debug, Clone)]
pub struct Replicate {
    /// Noisy dissimilarities, first-four noisy features as conditioning
    /// (masked rows NaN), unit weights, p = 3.
    pub problem: Problem,
    /// All seven features after feature noise, N x 7.
    pub features: DMatrix<f64>,
    /// Last three noisy features, N x 3: what the configuration should
    /// recover.
    pub target_true: DMatrix<f64>,
    /// First four noisy features at the masked rows (ascending row order),
    /// the imputation ground truth.
    pub v2_true: DMatrix<f64>,
    /// Diagonal of square-rooted conditioning-feature weights, 4 x 4.
    pub b_true: DMatrix<f64>,
    /// Fully masked row indices, ascending.
    pub masked_rows: Vec<usize>,
}

/// Normalized feature weights for one replicate. `rng` is consumed only in
/// the random mode.
pub fn feature_weights(mode: WeightMode, rng: &mut ChaCha8Rng) -> [f64; N_FEATURES] {
    let mut raw = match mode {
        WeightMode::ConsumerReports => CONSUMER_REPORTS_SCORES,
        WeightMode::RandomUniform => {
            let mut w = [0.0; N_FEATURES];
            for v in &mut w {
                *v = 3.0 + 4.0 * rng.random::<f64>();
            }
            w
        }
    };
    let total: f64 = raw.iter().sum();
    for v in &mut raw {
        *v /= total;
    }
    raw
}

/// Ceiling of `x` that forgives floating-point dust just above an integer,
/// so a nominally exact product like 100 * 0.7 still maps to 70.
fn robust_ceil(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Generates replicate `replicate_index` of `config`, seeded with
/// `config.seed + replicate_index`.
pub fn gen_replicate(config: &SimConfig, replicate_index: u64) -> Result<Replicate> {
    let n = config.n;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two products, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&config.n1_ratio) {
        return Err(Error::InvalidArgument(format!(
            "complete-row ratio must lie in [0, 1], got {}",
            config.n1_ratio
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(replicate_index));

    let mut clean = DMatrix::zeros(n, N_FEATURES);
    for i in 0..n {
        for k in 0..N_FEATURES {
            clean[(i, k)] = rng.random::<f64>();
        }
    }
    let weights = feature_weights(config.weight_mode, &mut rng);

    let mut delta = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for k in 0..N_FEATURES {
                let d = clean[(i, k)] - clean[(j, k)];
                s += weights[k] * d * d;
            }
            let d = s.sqrt();
            delta[(i, j)] = d;
            delta[(j, i)] = d;
        }
    }
    if config.zeta1 > 0.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                let sd = config.zeta1 * delta[(i, j)];
                if sd <= 0.0 {
                    continue;
                }
                let noise_dist = Normal::new(0.0, sd).expect("positive noise scale");
                let eps = if config.ordered_pair_noise {
                    let a: f64 = noise_dist.sample(&mut rng);
                    let b: f64 = noise_dist.sample(&mut rng);
                    0.5 * (a + b)
                } else {
                    noise_dist.sample(&mut rng)
                };
                let noisy = (delta[(i, j)] + eps).max(0.0);
                delta[(i, j)] = noisy;
                delta[(j, i)] = noisy;
            }
        }
    }

    let mut features = clean;
    if config.zeta2 > 0.0 {
        for i in 0..n {
            for k in 0..N_FEATURES {
                let sd = config.zeta2 * features[(i, k)].abs();
                if sd <= 0.0 {
                    continue;
                }
                let noise_dist = Normal::new(0.0, sd).expect("positive noise scale");
                features[(i, k)] += noise_dist.sample(&mut rng) as f64;
            }
        }
    }

    let n2 = robust_ceil(n as f64 * (1.0 - config.n1_ratio));
    if n2 > n {
        return Err(Error::InvalidArgument(format!(
            "cannot mask {n2} of {n} rows"
        )));
    }
    let mut masked_rows = rand::seq::index::sample(&mut rng, n, n2).into_vec();
    masked_rows.sort_unstable();

    let mut conditioning = features.view((0, 0), (n, N_CONDITIONING)).into_owned();
    let mut v2_true = DMatrix::zeros(n2, N_CONDITIONING);
    for (r, &i) in masked_rows.iter().enumerate() {
        for k in 0..N_CONDITIONING {
            v2_true[(r, k)] = conditioning[(i, k)];
            conditioning[(i, k)] = f64::NAN;
        }
    }
    let target_true = features.view((0, N_CONDITIONING), (n, N_TARGET)).into_owned();
    let b_true = DMatrix::from_fn(N_CONDITIONING, N_CONDITIONING, |r, c| {
        if r == c { weights[r].sqrt() } else { 0.0 }
    });

    let problem = Problem::new(delta, None, conditioning, N_TARGET)?;
    Ok(Replicate {
        problem,
        features,
        target_true,
        v2_true,
        b_true,
        masked_rows,
    })
}

pub const METHOD_PROPOSED_NAIVE: &str = "proposed_naive_init";
pub const METHOD_PROPOSED_COMPLETE_INIT: &str = "proposed_complete_init";
pub const METHOD_COMPLETE_ROWS_ONLY: &str = "complete_rows_only";

const METHODS: [&str; 3] = [
    METHOD_PROPOSED_NAIVE,
    METHOD_PROPOSED_COMPLETE_INIT,
    METHOD_COMPLETE_ROWS_ONLY,
];

/// One cell of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n1_ratio: f64,
    pub method: &'static str,
    pub metric: &'static str,
    pub median: f64,
}

/// Median scores per (ratio, method, metric), plus a `failures` row per
/// (ratio, method) counting replicates excluded from the medians.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    /// Comma-separated rendering with a header line.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("n1_ratio,method,metric,median\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.n1_ratio, row.method, row.metric, row.median
            ));
        }
        out
    }
}

/// Per-replicate scores of one method; `None` marks values lost to a
/// failure.
#[derive(Debug, Clone, Default)]
struct MethodScores {
    acc: Option<f64>,
    ps: Option<f64>,
    mse_b: Option<f64>,
    mse_v: Option<f64>,
    failed: bool,
}

fn score_proposed(rep: &Replicate, init: InitKind, base: &SolverOptions, seed: u64) -> MethodScores {
    let options = SolverOptions {
        init,
        seed,
        ..base.clone()
    };
    let partition = Partition::new(&rep.problem);
    let sol = match run_multistart(&rep.problem, &partition, &options) {
        Ok(s) => s,
        Err(_) => return MethodScores { failed: true, ..Default::default() },
    };
    let mut scores = MethodScores::default();
    scores.acc = acc(&sol.u, &rep.target_true).ok();
    scores.ps = procrustes_statistic(&sol.u, &rep.target_true).ok();
    scores.mse_b = mse_b(&sol.b, &rep.b_true).ok();
    let n2 = partition.n2;
    let q = rep.problem.q();
    let imputed = impute(
        &DMatrix::zeros(n2, q),
        &DMatrix::from_element(n2, q, 1.0),
        &sol.v2_tilde,
        &sol.b,
    );
    scores.mse_v = imputed.ok().and_then(|imp| mse_v(&imp.v2_hat, &rep.v2_true).ok());
    scores.failed =
        scores.acc.is_none() || scores.ps.is_none() || scores.mse_b.is_none() || scores.mse_v.is_none();
    scores
}

fn score_complete_only(rep: &Replicate, base: &SolverOptions, seed: u64) -> MethodScores {
    let full_partition = Partition::new(&rep.problem);
    let n1 = full_partition.n1;
    let complete = &full_partition.order[..n1];
    let mut delta = DMatrix::zeros(n1, n1);
    for (r, &i) in complete.iter().enumerate() {
        for (c, &j) in complete.iter().enumerate() {
            delta[(r, c)] = rep.problem.delta[(i, j)];
        }
    }
    let sub = match Problem::new(
        delta,
        None,
        full_partition.v1(&rep.problem),
        rep.problem.p,
    ) {
        Ok(p) => p,
        Err(_) => return MethodScores { failed: true, ..Default::default() },
    };
    let options = SolverOptions {
        init: InitKind::Naive,
        seed,
        ..base.clone()
    };
    let sub_partition = Partition::new(&sub);
    let sol = match run_multistart(&sub, &sub_partition, &options) {
        Ok(s) => s,
        Err(_) => return MethodScores { failed: true, ..Default::default() },
    };
    let mut target = DMatrix::zeros(n1, rep.target_true.ncols());
    for (r, &i) in complete.iter().enumerate() {
        target.row_mut(r).copy_from(&rep.target_true.row(i));
    }
    let mut scores = MethodScores::default();
    scores.acc = acc(&sol.u, &target).ok();
    scores.ps = procrustes_statistic(&sol.u, &target).ok();
    scores.mse_b = mse_b(&sol.b, &rep.b_true).ok();
    scores.mse_v = None;
    scores.failed = scores.acc.is_none() || scores.ps.is_none() || scores.mse_b.is_none();
    scores
}

fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Runs the three contenders over `config.replicates` replicates for each
/// ratio in `ratios` and collects median scores. `base` supplies the
/// stopping rule; its init kind and seed are overridden per method and
/// replicate. Replicates run in parallel; results are deterministic in the
/// config.
pub fn run_benchmark(
    config: &SimConfig,
    ratios: &[f64],
    base: &SolverOptions,
) -> Result<BenchTable> {
    let mut rows = Vec::new();
    for &ratio in ratios {
        let cell_config = SimConfig {
            n1_ratio: ratio,
            ..config.clone()
        };
        let all_scores: Vec<[MethodScores; 3]> = (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let seed = config.seed.wrapping_add(r);
                match gen_replicate(&cell_config, r) {
                    Ok(rep) => [
                        score_proposed(&rep, InitKind::Naive, base, seed),
                        score_proposed(&rep, InitKind::CompleteSmacof, base, seed),
                        score_complete_only(&rep, base, seed),
                    ],
                    Err(_) => std::array::from_fn(|_| MethodScores {
                        failed: true,
                        ..Default::default()
                    }),
                }
            })
            .collect();

        for (m, method) in METHODS.iter().enumerate() {
            let pick = |f: fn(&MethodScores) -> Option<f64>| -> Vec<f64> {
                all_scores.iter().filter_map(|s| f(&s[m])).collect()
            };
            let metrics: [(&'static str, Vec<f64>); 4] = [
                ("acc", pick(|s| s.acc)),
                ("ps", pick(|s| s.ps)),
                ("mse_b", pick(|s| s.mse_b)),
                ("mse_v", pick(|s| s.mse_v)),
            ];
            for (name, mut values) in metrics {
                if *method == METHOD_COMPLETE_ROWS_ONLY && name == "mse_v" {
                    continue;
                }
                if let Some(med) = median(&mut values) {
                    rows.push(BenchRow {
                        n1_ratio: ratio,
                        method,
                        metric: name,
                        median: med,
                    });
                }
            }
            let failures = all_scores.iter().filter(|s| s[m].failed).count();
            rows.push(BenchRow {
                n1_ratio: ratio,
                method,
                metric: "failures",
                median: failures as f64,
            });
        }
    }
    Ok(BenchTable { rows })
}
