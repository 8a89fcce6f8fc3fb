//! `dynkin` — game-option pricing on discrete diffusion chains.

mod commands;
mod config;
mod expr;
mod output;

use clap::{Parser, Subcommand};
use commands::{cmd_price, cmd_study, cmd_validate, CmdError, Context};
use output::OutDir;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dynkin",
    version,
    about = "Game (Israeli) option pricing by scenario-tree Dynkin games, with bound diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check model bounds, law moments and payoff invariants.
    Validate(CommonArgs),
    /// Price the game option by backward recursion.
    Price(CommonArgs),
    /// Run diagnostic studies across a grid ladder.
    Study(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also run the brute-force stopping-time oracle (price only).
    #[arg(long)]
    oracle: bool,
    /// Worker threads (defaults to the core count); results do not depend
    /// on this.
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(command: &Command) -> Result<i32, CmdError> {
    let (args, f): (&CommonArgs, fn(&Context, &OutDir) -> Result<i32, CmdError>) = match command {
        Command::Validate(a) => (a, cmd_validate),
        Command::Price(a) => (a, cmd_price),
        Command::Study(a) => (a, cmd_study),
    };
    if let Some(jobs) = args.jobs {
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let ctx = Context::load(&args.config, args.seed, args.jobs, args.oracle)?;
    let out = OutDir::create(&args.out)?;
    f(&ctx, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn internal_exit_code_is_three() {
        assert_eq!(commands::EXIT_INTERNAL, 3);
    }
}
