use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use padic_dnn::formats::{from_json, to_json, FunctionJson};
use padic_dnn::{Prime, TreeFunction};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(from_json(&text, &path.display().to_string())?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_text(path, &(to_json(value)? + "\n"))
}

/// Prints the JSON summary on stdout.
pub fn print_json<S: Serialize>(value: &S) -> Result<()> {
    println!("{}", to_json(value)?);
    Ok(())
}

pub fn read_function(path: &Path) -> Result<TreeFunction<f64>> {
    let f: FunctionJson = read_json(path)?;
    Ok(f.to_function()?)
}

/// The function in `path`, or zero on `G_level` when no file is given.
pub fn function_or_zero(path: Option<&Path>, p: Prime, level: u32) -> Result<TreeFunction<f64>> {
    match path {
        Some(path) => read_function(path),
        None => Ok(TreeFunction::zeros(p, level)?),
    }
}
