use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sage_cli::config::ExperimentConfig;
use sage_cli::report::text_table;
use sage_cli::runner;
use sage_cli::CliError;

#[derive(Parser)]
#[command(
    name = "sage",
    about = "GraphSAGE node classification with uniform and value-guided neighborhood sampling",
    after_help = "Set SAGE_THREADS to cap the worker thread pool."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the uniform vs. RL benchmark over every seed and write a report.
    Bench(CommonArgs),
    /// Train one model per the config's sampler mode; write a checkpoint.
    Train(CommonArgs),
    /// Evaluate the checkpoint under the output directory on the test split.
    Eval(CommonArgs),
    /// Generate the configured synthetic dataset into the output directory.
    Synth(CommonArgs),
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    runner::apply_overrides(&mut config, args.seed, args.out.clone());
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bench(args) => {
            let config = load(&args)?;
            let rows = runner::run_bench(&config)?;
            print!("{}", text_table(&rows));
            println!("report written to {}", config.out.display());
        }
        Command::Train(args) => {
            let config = load(&args)?;
            runner::run_train(&config)?;
        }
        Command::Eval(args) => {
            let config = load(&args)?;
            runner::run_eval(&config)?;
        }
        Command::Synth(args) => {
            let config = load(&args)?;
            runner::run_synth(&config)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    sage_core::init_thread_pool_from_env();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
