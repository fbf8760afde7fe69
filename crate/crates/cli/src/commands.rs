//! The four subcommands: fit, impute, simulate, bench.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;

use condmds::model::sammon_weights;
use condmds::simbench::{gen_replicate, run_benchmark, SimConfig, WeightMode};
use condmds::solver::run_multistart;
use condmds::{impute, Error, InitKind, Partition, Problem, SolverOptions};

use crate::error::CliError;
use crate::io;
use crate::result::{matrix_to_rows, rows_to_matrix, FitResult, OptionsEcho};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// Random standard-normal configuration.
    Naive,
    /// One-shot regression and classical-scaling start.
    ClosedForm,
    /// Fit the complete rows first, then fill in the rest.
    CompleteSmacof,
}

impl InitArg {
    fn to_kind(self) -> InitKind {
        match self {
            InitArg::Naive => InitKind::Naive,
            InitArg::ClosedForm => InitKind::ClosedForm,
            InitArg::CompleteSmacof => InitKind::CompleteSmacof,
        }
    }

    fn name(self) -> &'static str {
        match self {
            InitArg::Naive => "naive",
            InitArg::ClosedForm => "closed-form",
            InitArg::CompleteSmacof => "complete-smacof",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SymmetrizeArg {
    /// Replace each pair by the average of its two directions.
    Avg,
    /// Replace each pair by the sum of its two directions.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightModeArg {
    /// Fixed published feature importances.
    ConsumerReports,
    /// Random U(3,7) importances, normalized per replicate.
    RandomUniform,
}

impl WeightModeArg {
    fn to_core(self) -> WeightMode {
        match self {
            WeightModeArg::ConsumerReports => WeightMode::ConsumerReports,
            WeightModeArg::RandomUniform => WeightMode::RandomUniform,
        }
    }
}

/// Fit the model to a dissimilarity matrix and conditioning features.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dissimilarity matrix file (square, comma-separated).
    #[arg(long, value_name = "PATH")]
    pub delta: PathBuf,

    /// Conditioning feature matrix file (N rows, NA for missing).
    #[arg(long, value_name = "PATH")]
    pub cond: PathBuf,

    /// Configuration dimensions.
    #[arg(long)]
    pub p: usize,

    /// Weight matrix file; default is unit weights.
    #[arg(long, value_name = "PATH", conflicts_with = "sammon")]
    pub weights: Option<PathBuf>,

    /// Weight each pair by the reciprocal of its dissimilarity.
    #[arg(long)]
    pub sammon: bool,

    /// Stop once the normalized stress improves by no more than this.
    #[arg(long, default_value_t = 1e-6)]
    pub gamma: f64,

    /// Iteration cap.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,

    /// Starting-point strategy.
    #[arg(long, value_enum, default_value_t = InitArg::ClosedForm)]
    pub init: InitArg,

    /// Independent starts; the lowest-stress fit wins.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,

    /// Seed for every randomized choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Use the general solver even when all weights are equal.
    #[arg(long)]
    pub force_general_path: bool,

    /// How an asymmetric dissimilarity matrix is symmetrized.
    #[arg(long, value_enum, default_value_t = SymmetrizeArg::Avg)]
    pub symmetrize: SymmetrizeArg,

    /// Output JSON path.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

pub fn command_fit(args: &FitArgs) -> Result<(), CliError> {
    let dis = io::load_dissimilarity(&args.delta)?;
    let cond = io::load_conditioning(&args.cond)?;
    let n = dis.delta.nrows();
    if cond.values.nrows() != n {
        return Err(CliError::Invalid(format!(
            "{}: conditioning has {} rows but the dissimilarity matrix has {n}",
            args.cond.display(),
            cond.values.nrows()
        )));
    }

    let delta = match args.symmetrize {
        SymmetrizeArg::Avg => (&dis.delta + dis.delta.transpose()).scale(0.5),
        SymmetrizeArg::Sum => &dis.delta + dis.delta.transpose(),
    };
    let missing_pairs = dis.observed_pairs.map(|o| 1.0 - o);
    let (base_weights, weighting) = if let Some(path) = &args.weights {
        (io::load_weights(path, n)?, "file")
    } else if args.sammon {
        (sammon_weights(&delta, Some(&missing_pairs))?, "sammon")
    } else {
        (DMatrix::from_element(n, n, 1.0), "unit")
    };
    let weights = base_weights.component_mul(&dis.observed_pairs);

    let problem = Problem::new(delta, Some(weights), cond.values.clone(), args.p)?;
    let partition = Partition::new(&problem);
    let options = SolverOptions {
        gamma: args.gamma,
        max_iter: args.max_iter,
        init: args.init.to_kind(),
        restarts: args.restarts,
        seed: args.seed,
        force_general_path: args.force_general_path,
    };
    let sol = run_multistart(&problem, &partition, &options)?;

    let imputed = if partition.n2 == 0 {
        Some(Vec::new())
    } else {
        match impute(
            &partition.v2_observed(&problem),
            &partition.mask,
            &sol.v2_tilde,
            &sol.b,
        ) {
            Ok(result) => Some(matrix_to_rows(&result.v2_hat)),
            Err(Error::SingularTransform) => None,
            Err(e) => return Err(e.into()),
        }
    };

    let result = FitResult {
        embedding: matrix_to_rows(&sol.u),
        transform: matrix_to_rows(&sol.b),
        incomplete_rows: partition.incomplete_rows().to_vec(),
        embedded_incomplete: matrix_to_rows(&sol.v2_tilde),
        imputed,
        normalized_stress: sol.normalized_stress,
        stress_trace: sol.stress_trace.clone(),
        iterations: sol.iterations,
        converged: sol.converged,
        seed: args.seed,
        options: OptionsEcho {
            p: args.p,
            gamma: args.gamma,
            max_iter: args.max_iter,
            init: args.init.name().to_string(),
            restarts: args.restarts,
            force_general_path: args.force_general_path,
            weighting: weighting.to_string(),
            symmetrize: match args.symmetrize {
                SymmetrizeArg::Avg => "avg".to_string(),
                SymmetrizeArg::Sum => "sum".to_string(),
            },
        },
    };
    write_json(&args.out, &result)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Fill missing conditioning values using a previous fit.
#[derive(Debug, Args)]
pub struct ImputeArgs {
    /// Fit JSON produced by the fit command.
    #[arg(long, value_name = "PATH")]
    pub fit: PathBuf,

    /// Conditioning feature matrix with NA at the entries to fill.
    #[arg(long, value_name = "PATH")]
    pub cond: PathBuf,

    /// Output path for the completed matrix (comma-separated).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

pub fn command_impute(args: &ImputeArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.fit).map_err(|source| CliError::Io {
        path: args.fit.display().to_string(),
        source,
    })?;
    let fit: FitResult = serde_json::from_str(&text).map_err(|e| {
        CliError::Invalid(format!("{}: not a fit result: {e}", args.fit.display()))
    })?;
    let cond = io::load_conditioning(&args.cond)?;
    let n = cond.values.nrows();
    let q = cond.values.ncols();

    let incomplete: Vec<usize> = (0..n)
        .filter(|&i| (0..q).any(|k| cond.values[(i, k)].is_nan()))
        .collect();
    if incomplete != fit.incomplete_rows {
        return Err(CliError::Invalid(format!(
            "{}: rows with missing values {:?} do not match the fit's incomplete rows {:?}",
            args.cond.display(),
            incomplete,
            fit.incomplete_rows
        )));
    }

    let b = rows_to_matrix(&fit.transform, "transform")?;
    if b.nrows() != q || b.ncols() != q {
        return Err(CliError::Invalid(format!(
            "transform is {}x{} but the conditioning has {q} columns",
            b.nrows(),
            b.ncols()
        )));
    }
    let v2_tilde = rows_to_matrix(&fit.embedded_incomplete, "embedded_incomplete")?;
    if v2_tilde.nrows() != incomplete.len() || v2_tilde.ncols() != q {
        return Err(CliError::Invalid(format!(
            "embedded_incomplete is {}x{}, expected {}x{q}",
            v2_tilde.nrows(),
            v2_tilde.ncols(),
            incomplete.len()
        )));
    }

    let n2 = incomplete.len();
    let mut v2_observed = DMatrix::zeros(n2, q);
    let mut mask = DMatrix::zeros(n2, q);
    for (r, &i) in incomplete.iter().enumerate() {
        for k in 0..q {
            if cond.values[(i, k)].is_nan() {
                mask[(r, k)] = 1.0;
            } else {
                v2_observed[(r, k)] = cond.values[(i, k)];
            }
        }
    }
    let result = impute(&v2_observed, &mask, &v2_tilde, &b)?;

    let mut full = cond.values.clone();
    for (r, &i) in incomplete.iter().enumerate() {
        for k in 0..q {
            full[(i, k)] = result.v2_hat[(r, k)];
        }
    }
    io::write_matrix(&args.out, &full, cond.row_labels.as_deref())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Generate one synthetic replicate and write its files.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of objects.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Fraction of rows with complete conditioning features.
    #[arg(long, default_value_t = 0.5)]
    pub n1_ratio: f64,

    /// Dissimilarity noise as a fraction of each distance.
    #[arg(long, default_value_t = 0.2)]
    pub zeta1: f64,

    /// Feature noise as a fraction of each value.
    #[arg(long, default_value_t = 0.05)]
    pub zeta2: f64,

    #[arg(long, value_enum, default_value_t = WeightModeArg::ConsumerReports)]
    pub weight_mode: WeightModeArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Which replicate of the seed to generate.
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,

    /// Draw dissimilarity noise per ordered pair and average directions.
    #[arg(long)]
    pub ordered_pair_noise: bool,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn command_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = SimConfig {
        n: args.n,
        n1_ratio: args.n1_ratio,
        zeta1: args.zeta1,
        zeta2: args.zeta2,
        weight_mode: args.weight_mode.to_core(),
        replicates: 1,
        seed: args.seed,
        ordered_pair_noise: args.ordered_pair_noise,
    };
    let rep = gen_replicate(&config, args.replicate)?;
    std::fs::create_dir_all(&args.out).map_err(|source| CliError::Write {
        path: args.out.display().to_string(),
        source,
    })?;
    let write = |name: &str, m: &DMatrix<f64>| -> Result<(), CliError> {
        io::write_matrix(&args.out.join(name), m, None)
    };
    write("delta.csv", &rep.problem.delta)?;
    write("conditioning.csv", &rep.problem.conditioning)?;
    write("features.csv", &rep.features)?;
    write("target_true.csv", &rep.target_true)?;
    write("v2_true.csv", &rep.v2_true)?;
    write("b_true.csv", &rep.b_true)?;
    let rows = rep
        .masked_rows
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    let path = args.out.join("masked_rows.csv");
    std::fs::write(&path, rows + "\n").map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })?;
    println!("wrote 7 files to {}", args.out.display());
    Ok(())
}

/// Run the replicated benchmark and write the median table.
#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Complete-row ratios to sweep; repeat the flag for several.
    #[arg(long = "n1-ratio", value_name = "RATIO", num_args = 1.., default_values_t = [0.3, 0.5, 0.8])]
    pub n1_ratio: Vec<f64>,

    #[arg(long, default_value_t = 0.2)]
    pub zeta1: f64,

    #[arg(long, default_value_t = 0.05)]
    pub zeta2: f64,

    #[arg(long, value_enum, default_value_t = WeightModeArg::ConsumerReports)]
    pub weight_mode: WeightModeArg,

    #[arg(long, default_value_t = 100)]
    pub replicates: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1e-6)]
    pub gamma: f64,

    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,

    #[arg(long, default_value_t = 1)]
    pub restarts: usize,

    #[arg(long)]
    pub ordered_pair_noise: bool,

    /// Output CSV path; prints to standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn command_bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = SimConfig {
        n: args.n,
        n1_ratio: args.n1_ratio.first().copied().unwrap_or(0.5),
        zeta1: args.zeta1,
        zeta2: args.zeta2,
        weight_mode: args.weight_mode.to_core(),
        replicates: args.replicates,
        seed: args.seed,
        ordered_pair_noise: args.ordered_pair_noise,
    };
    let base = SolverOptions {
        gamma: args.gamma,
        max_iter: args.max_iter,
        restarts: args.restarts,
        ..Default::default()
    };
    let table = run_benchmark(&config, &args.n1_ratio, &base)?;
    let rendered = table.to_delimited();
    match &args.out {
        Some(path) => {
            std::fs::write(path, rendered).map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            })?;
            println!("wrote {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}

fn write_json(path: &Path, result: &FitResult) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(result)
        .map_err(|e| CliError::Invalid(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}
