use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use padic_dnn::formats::function_csv;
use padic_dnn::solver::{solve, NetworkJson};
use padic_dnn::NetworkParams;

use crate::io;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Network descriptor (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Input function `x` (JSON); zero when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Stop once a Picard step is this small
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Hidden state as `index,value` CSV.
    #[arg(long)]
    state_csv: Option<PathBuf>,
    /// Network output as `index,value` CSV.
    #[arg(long)]
    output_csv: Option<PathBuf>,
    /// Copy of the JSON summary.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<ExitCode> {
    let spec: NetworkJson = io::read_json(&args.network)?;
    let params: NetworkParams<f64> = spec.to_params()?;
    let x = io::function_or_zero(args.input.as_deref(), params.prime(), params.levels().input())?;
    let rep = solve(&params, &x, args.tol, args.max_iter)?;
    if let Some(path) = &args.state_csv {
        io::write_text(path, &function_csv(&rep.state))?;
    }
    if let Some(path) = &args.output_csv {
        io::write_text(path, &function_csv(&rep.output))?;
    }
    let summary = rep.summary();
    if let Some(path) = &args.report {
        io::write_json(path, &summary)?;
    }
    io::print_json(&summary)?;
    if rep.stable && rep.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "warning: no certified state (q = {:.6}, converged = {})",
            rep.contraction_q, rep.converged
        );
        Ok(ExitCode::from(crate::EXIT_UNSTABLE))
    }
}
