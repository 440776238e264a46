// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod reference;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunArgs;

/// Positivity-preserving relaxation runs for production-destruction systems.
#[derive(Debug, Parser)]
#[command(name = "relax-mprk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one problem and write a CSV row per accepted step.
    Run(RunArgs),
    /// Errors and observed orders over a halving step-size ladder.
    Convergence {
        #[command(flatten)]
        args: RunArgs,
        /// Number of step sizes, starting at --dt0.
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Registered problems, methods, relaxation modes and solvers.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Convergence { args, levels } => commands::convergence(args, levels),
        Command::List => commands::list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relax-mprk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
