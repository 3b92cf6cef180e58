use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use padic_dnn::recast::{recast, verify_equivalence, LayeredJson, NeuronMapJson};
use padic_dnn::solver::NetworkJson;
use padic_dnn::{LayeredNet, Prime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Layered network descriptor (JSON).
    #[arg(long)]
    net: PathBuf,
    /// Prime; defaults to the smallest prime above the widest layer.
    #[arg(long)]
    p: Option<u64>,
    /// Random probe inputs, uniform on [-1, 1].
    #[arg(long, default_value_t = 16)]
    probes: usize,
    /// Tree network descriptor (JSON).
    #[arg(long)]
    network_out: Option<PathBuf>,
    /// Neuron addresses per layer (JSON).
    #[arg(long)]
    map_out: Option<PathBuf>,
    /// Copy of the equivalence report.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run(args: Args, seed: u64) -> Result<ExitCode> {
    let spec: LayeredJson = io::read_json(&args.net)?;
    let net: LayeredNet<f64> = spec.to_net()?;
    let p = match args.p {
        Some(p) => Prime::new(p)?,
        None => Prime::next_above(net.max_width() as u64)?,
    };
    let result = recast(&net, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = net.widths()[0];
    let inputs: Vec<Vec<f64>> = (0..args.probes)
        .map(|_| (0..width).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let report = verify_equivalence(&net, &result, &inputs)?;
    if let Some(path) = &args.network_out {
        io::write_json(path, &NetworkJson::from(&result.params))?;
    }
    if let Some(path) = &args.map_out {
        io::write_json(path, &NeuronMapJson::from(&result.neuron_map))?;
    }
    if let Some(path) = &args.report {
        io::write_json(path, &report)?;
    }
    io::print_json(&report)?;
    Ok(ExitCode::SUCCESS)
}
