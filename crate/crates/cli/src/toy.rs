use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use padic_dnn::toy::{edge_detect, enumerate_states, DEFAULT_STATE_CAP};
use padic_dnn::{GrayImage, PgmFormat, Prime, ToyParams, TreeFunction};
use serde::Serialize;

use crate::io;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    /// Same as the input image.
    Same,
    Ascii,
    Binary,
}

#[derive(clap::Args, Debug)]
pub struct EdgesArgs {
    /// Grayscale PGM (P2 or P5, maxval 255).
    #[arg(long)]
    input: PathBuf,
    /// Edge image (PGM)
    #[arg(long)]
    output: PathBuf,
    /// Self-coupling; at most 1.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Prime
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// Tree level; defaults to the smallest level holding every pixel.
    #[arg(long)]
    level: Option<u32>,
    /// `laplacian`, `identity`, or a function JSON file.
    #[arg(long, default_value = "laplacian")]
    kernel: String,
    /// Constant bias.
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = OutFormat::Same)]
    format: OutFormat,
}

#[derive(Serialize)]
struct EdgesSummary {
    width: usize,
    height: usize,
    p: u64,
    level: u32,
    a: f64,
    /// Output pixels at 0 or 255.
    saturated: usize,
}

/// Smallest `l` with `p^l ≥ n`.
fn level_for(p: Prime, n: usize) -> Result<u32> {
    let mut l = 0;
    while p.size(l)? < n {
        l += 1;
    }
    Ok(l)
}

/// Five-point Laplacian on the row-major pixel order, scaled by `p^l` so
/// that the Haar-weighted convolution gives `4x(I) - Σ neighbours`.
fn laplacian(p: Prime, level: u32, width: usize) -> Result<TreeFunction<f64>> {
    let n = p.size(level)?;
    let mut k = vec![0.0; n];
    let s = n as f64;
    k[0] += 4.0 * s;
    for off in [1 % n, width % n] {
        k[off] -= s;
        k[(n - off) % n] -= s;
    }
    Ok(TreeFunction::new(p, level, k)?)
}

fn load_kernel(spec: &str, p: Prime, level: u32, width: usize) -> Result<TreeFunction<f64>> {
    match spec {
        "laplacian" => laplacian(p, level, width),
        "identity" => {
            let n = p.size(level)?;
            Ok(TreeFunction::from_fn(p, level, |i| if i == 0 { n as f64 } else { 0.0 })?)
        }
        path => {
            let k = io::read_function(Path::new(path))?;
            if k.prime() != p {
                bail!("kernel prime {} does not match --p {}", k.prime(), p);
            }
            Ok(k)
        }
    }
}

pub fn run_edges(args: EdgesArgs) -> Result<ExitCode> {
    if args.a > 1.0 {
        bail!("a = {} > 1 has many states; use the `states` subcommand", args.a);
    }
    let (image, in_format) = GrayImage::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let p = Prime::new(args.p)?;
    let n = image.width() * image.height();
    let level = match args.level {
        Some(l) => l,
        None => level_for(p, n)?,
    };
    let kernel = load_kernel(&args.kernel, p, level, image.width())?;
    let level = level.max(kernel.level());
    let params = ToyParams::new(args.a, level, kernel, TreeFunction::constant(p, 0, args.xi)?)?;
    let out = edge_detect(&image, &params)?;
    let format = match args.format {
        OutFormat::Same => in_format,
        OutFormat::Ascii => PgmFormat::Ascii,
        OutFormat::Binary => PgmFormat::Binary,
    };
    out.write(&args.output, format)?;
    io::print_json(&EdgesSummary {
        width: image.width(),
        height: image.height(),
        p: p.get(),
        level,
        a: args.a,
        saturated: out.pixels().iter().filter(|&&v| v == 0 || v == 255).count(),
    })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(clap::Args, Debug)]
pub struct StatesArgs {
    /// Self-coupling; must exceed 1.
    #[arg(long)]
    a: f64,
    /// Drive `b` as a function JSON file.
    #[arg(long, conflicts_with = "drive_constant")]
    drive: Option<PathBuf>,
    /// Constant drive `b`.
    #[arg(long)]
    drive_constant: Option<f64>,
    /// Prime
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// Tree level
    #[arg(long, default_value_t = 1)]
    level: u32,
    /// Largest state count enumerated in full; above it states are sampled.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: u64,
    /// States as `state,index,label,value` CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Hasse diagram (DOT); skipped for sampled state sets.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Serialize)]
struct LatticeSummary {
    pairs: usize,
    pairs_with_meet: usize,
    pairs_with_join: usize,
    is_lattice: bool,
}

#[derive(Serialize)]
struct StatesSummary {
    a: f64,
    p: u64,
    level: u32,
    /// Exact, as a decimal string.
    count: String,
    returned: usize,
    sampled: bool,
    bistable: usize,
    minimal: Option<usize>,
    partial_order: Option<bool>,
    lattice: Option<LatticeSummary>,
    max_residual: f64,
    dot_written: bool,
}

pub fn run_states(args: StatesArgs, seed: u64) -> Result<ExitCode> {
    if !(args.a > 1.0) {
        bail!("enumeration needs a > 1 (got {}); for a <= 1 the state is unique", args.a);
    }
    let p = Prime::new(args.p)?;
    let b = match (&args.drive, args.drive_constant) {
        (Some(path), _) => io::read_function(path)?,
        (None, Some(c)) => TreeFunction::constant(p, args.level, c)?,
        (None, None) => TreeFunction::zeros(p, args.level)?,
    };
    let level = args.level.max(b.level());
    let params = ToyParams::zero(args.a, p, level)?;
    let drive = params.drive_from(b)?;
    let poset = enumerate_states(&params, &drive, args.cap, seed)?;
    if let Some(path) = &args.csv {
        io::write_text(path, &poset.states_csv())?;
    }
    let full = !poset.is_sampled();
    let dot_written = match (&args.dot, full) {
        (Some(path), true) => {
            io::write_text(path, &poset.hasse_dot())?;
            true
        }
        _ => false,
    };
    let summary = StatesSummary {
        a: args.a,
        p: p.get(),
        level,
        count: poset.count().to_string(),
        returned: poset.states().len(),
        sampled: poset.is_sampled(),
        bistable: poset.bistable().len(),
        minimal: full.then(|| poset.minimal_elements().map(|m| m.len())).transpose()?,
        partial_order: full.then(|| poset.check_partial_order().holds()),
        lattice: poset.lattice_report().map(|r| LatticeSummary {
            pairs: r.pairs,
            pairs_with_meet: r.pairs_with_meet,
            pairs_with_join: r.pairs_with_join,
            is_lattice: r.is_lattice(),
        }),
        max_residual: poset.max_residual(args.a, &drive)?,
        dot_written,
    };
    io::print_json(&summary)?;
    Ok(ExitCode::SUCCESS)
}
