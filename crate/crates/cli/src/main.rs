//! `padic-dnn`: solve, recast, edge-detect, enumerate, sweep and sample
//! hierarchical networks from JSON descriptors.

// NaN must fail range checks, so `!(x <= y)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod io;
mod prior;
mod recast;
mod solve;
mod sweep;
mod toy;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status for a run that finished but did not reach a stable state.
pub const EXIT_UNSTABLE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "padic-dnn", version, about = "Hierarchical (p-adic) deep neural networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find the hidden state of a network by fixed-point iteration.
    Solve(solve::Args),
    /// Rewrite a layered network as a tree network and check equivalence.
    Recast(recast::Args),
    /// Run the edge-detector toy model on a PGM image.
    Edges(toy::EdgesArgs),
    /// Enumerate the states of the toy model for a > 1.
    States(toy::StatesArgs),
    /// Sweep a scalar parameter and record stability diagnostics.
    Sweep(sweep::Args),
    /// Prior covariances and their Monte Carlo check.
    Prior(prior::Args),
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Solve(a) => solve::run(a),
        Command::Recast(a) => recast::run(a, cli.seed),
        Command::Edges(a) => toy::run_edges(a),
        Command::States(a) => toy::run_states(a, cli.seed),
        Command::Sweep(a) => sweep::run(a),
        Command::Prior(a) => prior::run(a, cli.seed),
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for an uncertified solve.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
