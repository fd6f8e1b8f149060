use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stopgame_cli::commands::{self, AttackerChoice, DefenderChoice};
use stopgame_cli::{init_threads, CliResult, Experiment};

#[derive(Parser)]
#[command(name = "stopgame", version, about = "Intrusion prevention as an optimal stopping game")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit per-state Gaussian mixtures to an alert trace and discretize them.
    FitObs {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        k0: usize,
        #[arg(long)]
        k1: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run threshold fictitious play for every seed of an experiment.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a defender against an attacker and report episode statistics.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        defender: DefenderChoice,
        #[arg(long, value_enum)]
        attacker: AttackerChoice,
        #[arg(long)]
        episodes: usize,
    },
    /// Approximate the game value by minimax value iteration.
    Value {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.cmd {
        Cmd::FitObs { trace, k0, k1, n, out } => commands::fit_obs(&trace, k0, k1, n, &out).map(drop),
        Cmd::Train { config, out } => commands::train(&Experiment::load(&config)?, &out).map(drop),
        Cmd::Evaluate {
            config,
            defender,
            attacker,
            episodes,
        } => commands::evaluate(&Experiment::load(&config)?, defender, attacker, episodes).map(drop),
        Cmd::Value { config, grid, out } => commands::value(&Experiment::load(&config)?, grid, &out).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
