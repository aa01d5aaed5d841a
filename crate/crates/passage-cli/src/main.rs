use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use passage_cli::config::Threads;
use passage_cli::{runner, CliError, ExperimentConfig};

/// Simulate perpetuity first passage times and check them against their
/// large-deviation asymptotics.
#[derive(Parser)]
#[command(name = "passage", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roots, tilt points, rate function and regimes over the tau list.
    Analyze(RunArgs),
    /// Sample paths of the backward and forward recursions.
    Simulate(RunArgs),
    /// Estimate passage probabilities over the (u, tau) grid.
    Estimate(RunArgs),
    /// Estimate and compare against the regime-appropriate prediction.
    Compare(RunArgs),
    /// Fit the stationary tail exponent from a long forward run.
    Tail(RunArgs),
    /// Large-time regime diagnostics over the tau list.
    Regimes(RunArgs),
    /// Sharp walk-tail approximation against the Gaussian oracle.
    Petrov(RunArgs),
    /// Cross-check first passage against forward exceedance.
    Duality(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count ("auto" or an integer); the
    /// PASSAGE_THREADS environment variable sits between the config
    /// value and this flag.
    #[arg(long)]
    threads: Option<String>,
    /// Directory for the CSV and manifest artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (subcommand, args) = match &cli.command {
        Command::Analyze(a) => (runner::Subcommand::Analyze, a),
        Command::Simulate(a) => (runner::Subcommand::Simulate, a),
        Command::Estimate(a) => (runner::Subcommand::Estimate, a),
        Command::Compare(a) => (runner::Subcommand::Compare, a),
        Command::Tail(a) => (runner::Subcommand::Tail, a),
        Command::Regimes(a) => (runner::Subcommand::Regimes, a),
        Command::Petrov(a) => (runner::Subcommand::Petrov, a),
        Command::Duality(a) => (runner::Subcommand::Duality, a),
    };
    match execute(subcommand, args) {
        Ok(artifacts) => {
            println!("wrote {}", artifacts.csv_path.display());
            println!("wrote {}", artifacts.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn execute(
    subcommand: runner::Subcommand,
    args: &RunArgs,
) -> Result<runner::RunArtifacts, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::parse_toml(&text)?;

    // precedence: CLI flag > environment > config file
    if let Ok(env_threads) = std::env::var("PASSAGE_THREADS") {
        config.threads = env_threads
            .parse()
            .map_err(|e| CliError::Config(format!("PASSAGE_THREADS: {e}")))?;
    }
    if let Some(flag) = &args.threads {
        config.threads = flag
            .parse()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;

    let threads = match config.threads {
        Threads::Auto => std::thread::available_parallelism()
            .map(usize::from)
            .unwrap_or(1),
        Threads::Count(n) => n,
    };
    // the pool is process-global; later calls with the same size are no-ops
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();

    runner::run(subcommand, &config, &args.out_dir, threads)
}
