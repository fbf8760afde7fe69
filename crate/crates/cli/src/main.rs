use clap::{Parser, Subcommand};

use condmds_cli::commands::{
    command_bench, command_fit, command_impute, command_simulate, BenchArgs, FitArgs, ImputeArgs,
    SimulateArgs,
};

/// Conditional multidimensional scaling with missing conditioning values.
#[derive(Debug, Parser)]
#[command(name = "condmds", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a configuration, transform, and free coordinates to data.
    Fit(FitArgs),
    /// Fill missing conditioning values using a previous fit.
    Impute(ImputeArgs),
    /// Generate one synthetic replicate and write its files.
    Simulate(SimulateArgs),
    /// Benchmark the method against a complete-rows-only fit.
    Bench(BenchArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(args) => command_fit(args),
        Command::Impute(args) => command_impute(args),
        Command::Simulate(args) => command_simulate(args),
        Command::Bench(args) => command_bench(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
