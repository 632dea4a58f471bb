use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fuzzy_l1_cli::{cmd_compare, cmd_simulate, cmd_tune, load_config, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "fuzzyl1", about = "Fuzzy-tuned L1 adaptive control scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop rollout and write trajectory.csv + status.json.
    Simulate(RunArgs),
    /// Tune the fuzzy output membership set with PSO; write tuning.json +
    /// convergence.csv.
    Tune(RunArgs),
    /// Run constant and fuzzy modes side by side; write both CSVs +
    /// summary.json.
    Compare(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed (tuning only).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's out_dir, else ".".
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(command: Command) -> i32 {
    let (args, runner): (_, fn(_, _) -> _) = match command {
        Command::Simulate(args) => (args, cmd_simulate as fn(&_, &_) -> _),
        Command::Tune(args) => (args, cmd_tune),
        Command::Compare(args) => (args, cmd_compare),
    };
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args
        .out_dir
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match runner(&config, &out_dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse().command) as u8)
}
