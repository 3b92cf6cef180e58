use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use padic_dnn::prior::{covariance_csv, mc_validate, prior_covariance, PriorJson};
use padic_dnn::Activation;

use crate::io;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Prior descriptor (JSON).
    #[arg(long)]
    prior: PathBuf,
    /// Fixed hidden state `h` (JSON); zero when omitted.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Input function `x` (JSON); zero when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Hidden activation: tanh, pwl_sigmoid or identity
    #[arg(long, default_value = "tanh")]
    phi: String,
    /// Output activation
    #[arg(long, default_value = "tanh")]
    varphi: String,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Directory for the covariance CSVs and the report.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: Args, seed: u64) -> Result<ExitCode> {
    let spec: PriorJson = io::read_json(&args.prior)?;
    let prior = spec.to_prior()?;
    let (p, l) = (prior.prime(), prior.level());
    let h = io::function_or_zero(args.state.as_deref(), p, l)?;
    let x = io::function_or_zero(args.input.as_deref(), p, l)?;
    let phi = Activation::by_name(&args.phi)?;
    let varphi = Activation::by_name(&args.varphi)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let write = |name: &str, m: &DMatrix<f64>| io::write_text(&args.out_dir.join(name), &covariance_csv(m));

    let analytic = prior_covariance(&prior, &h, &h, &x, &phi, &varphi)?;
    write("hidden_cov.csv", &analytic.hidden)?;
    write("output_cov.csv", &analytic.output)?;
    let rep = mc_validate(&prior, &h, &x, &phi, &varphi, args.n, seed)?;
    write("empirical_hidden.csv", &rep.empirical_hidden)?;
    write("empirical_output.csv", &rep.empirical_output)?;
    write("z_hidden.csv", &rep.z_hidden)?;
    write("z_output.csv", &rep.z_output)?;
    let summary = rep.summary();
    io::write_json(&args.out_dir.join("mc_report.json"), &summary)?;
    io::print_json(&summary)?;
    Ok(ExitCode::SUCCESS)
}
