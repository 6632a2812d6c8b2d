use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

/// Simulate and evaluate agent societies in an e-commerce sandbox.
#[derive(Debug, Parser)]
#[command(name = "society", version, about)]
struct Cli {
    #[command(flatten)]
    out: OutArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Parent of the generated run directory.
    #[arg(long, global = true, default_value = "runs")]
    pub out_dir: PathBuf,
    /// Exact output directory, bypassing the generated name.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a relationship graph and write it as an edge list.
    GenGraph(commands::GenGraphArgs),
    /// Run a simulation from a config file, or resume one from a snapshot.
    Run(commands::RunArgs),
    /// Held-out purchase accuracy in the a@(a+b) settings.
    EvalPurchase(commands::EvalPurchaseArgs),
    /// Category co-purchase PMI matrix.
    EvalPmi(commands::EvalPmiArgs),
    /// Top-n purchase concentration across agent scales.
    EvalConcentration(commands::EvalConcentrationArgs),
    /// Token consumption with and without fast memory.
    EvalTokens(commands::EvalTokensArgs),
    /// Information spread over random, small-world and lattice graphs.
    EvalNetwork(commands::EvalNetworkArgs),
    /// Re-derive run statistics from an event log.
    Replay(commands::ReplayArgs),
}

/// Bad command-line input that is not a library error.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<agent_society::Error>() {
        Some(e) if e.is_user_error() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenGraph(a) => commands::gen_graph(&cli.out, a),
        Command::Run(a) => commands::run(&cli.out, a),
        Command::EvalPurchase(a) => commands::eval_purchase(&cli.out, a),
        Command::EvalPmi(a) => commands::eval_pmi(&cli.out, a),
        Command::EvalConcentration(a) => commands::eval_concentration(&cli.out, a),
        Command::EvalTokens(a) => commands::eval_tokens(&cli.out, a),
        Command::EvalNetwork(a) => commands::eval_network(&cli.out, a),
        Command::Replay(a) => commands::replay(&cli.out, a),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
