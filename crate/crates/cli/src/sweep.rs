use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{ensure, Result};
use clap::ValueEnum;
use padic_dnn::formats::fmt_num;
use padic_dnn::solver::{solve, NetworkJson};
use padic_dnn::NetworkParams;

use crate::io;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Param {
    /// Multiplier of the weight kernel `W` (the coupling `a` of a uniform kernel).
    #[value(alias = "a")]
    WScale,
    /// Multiplier of the bias `ξ`.
    XiScale,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Network descriptor used as the template (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Input function `x` (JSON); zero when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Param::WScale)]
    param: Param,
    /// First grid value
    #[arg(long)]
    from: f64,
    /// Last grid value
    #[arg(long)]
    to: f64,
    /// Grid points, endpoints included.
    #[arg(long, default_value_t = 11)]
    steps: usize,
    /// Stop once a Picard step is this small
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn grid(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || from == to {
        return vec![from];
    }
    let last = (steps - 1) as f64;
    (0..steps).map(|k| from + (to - from) * k as f64 / last).collect()
}

fn instance(template: &NetworkParams<f64>, param: Param, value: f64) -> Result<NetworkParams<f64>> {
    Ok(match param {
        Param::WScale => template.with_weights(template.weights().scale(value))?,
        Param::XiScale => {
            let levels = template.levels();
            NetworkParams::builder(template.prime(), levels.input(), levels.depth())
                .phi(template.phi().clone())
                .varphi(template.varphi().clone())
                .weights(template.weights().clone())
                .input_weights(template.input_weights().clone())
                .output_weights(template.output_weights().clone())
                .bias(template.bias().scale(value))
                .output_bias(template.output_bias().clone())
                .build()?
        }
    })
}

pub fn run(args: Args) -> Result<ExitCode> {
    ensure!(args.from.is_finite() && args.to.is_finite(), "sweep bounds must be finite");
    let spec: NetworkJson = io::read_json(&args.network)?;
    let template: NetworkParams<f64> = spec.to_params()?;
    let x = io::function_or_zero(args.input.as_deref(), template.prime(), template.levels().input())?;
    let mut csv = String::from("param,q,stable,iterations,residual,state_norm\n");
    for value in grid(args.from, args.to, args.steps) {
        let net = instance(&template, args.param, value)?;
        let rep = solve(&net, &x, args.tol, args.max_iter)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_num(value),
            fmt_num(rep.contraction_q),
            rep.stable,
            rep.iterations,
            fmt_num(rep.residual),
            fmt_num(rep.state.l2_norm())
        );
    }
    match &args.out {
        Some(path) => io::write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
