//! Text formats: JSON descriptors with 17 significant digits and CSV.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::padic::Prime;
use crate::scalar::Real;
use crate::tree::{TreeFunction, TreeKernel};

/// Formats a number with 17 significant digits (shortest form that always
/// round-trips an `f64`).
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as compact JSON, floats with 17 significant digits.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Parses JSON, reporting line and column on failure.
pub fn from_json<D: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("{what}: {e}"))
    })
}

/// Wire form of a [`TreeFunction`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionJson {
    pub p: u64,
    pub level: u32,
    pub coeffs: Vec<f64>,
}

/// Wire form of a [`TreeKernel`]: dense row-major `coeffs`, or sparse
/// `entries` as `[row, column, value]` triples.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KernelJson {
    pub p: u64,
    pub level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<(usize, usize, f64)>>,
}

impl<T: Real> From<&TreeFunction<T>> for FunctionJson {
    fn from(f: &TreeFunction<T>) -> Self {
        Self { p: f.prime().get(), level: f.level(), coeffs: f.coeffs().iter().map(|x| x.as_f64()).collect() }
    }
}

impl<T: Real> From<&TreeKernel<T>> for KernelJson {
    fn from(k: &TreeKernel<T>) -> Self {
        let (coeffs, entries) = match k.dense_coeffs() {
            Some(c) => (Some(c.iter().map(|x| x.as_f64()).collect()), None),
            None => (None, Some(k.entries().map(|(i, j, v)| (i, j, v.as_f64())).collect())),
        };
        Self { p: k.prime().get(), level: k.level(), coeffs, entries }
    }
}

impl FunctionJson {
    pub fn to_function<T: Real>(&self) -> Result<TreeFunction<T>> {
        TreeFunction::new(Prime::new(self.p)?, self.level, self.coeffs.iter().map(|&x| T::of(x)).collect())
    }
}

impl KernelJson {
    pub fn to_kernel<T: Real>(&self) -> Result<TreeKernel<T>> {
        let p = Prime::new(self.p)?;
        match (&self.coeffs, &self.entries) {
            (Some(c), None) => TreeKernel::new(p, self.level, c.iter().map(|&x| T::of(x)).collect()),
            (None, Some(e)) => TreeKernel::from_entries(p, self.level, e.iter().map(|&(i, k, v)| (i, k, T::of(v))).collect()),
            _ => Err(Error::Parse("kernel needs exactly one of `coeffs` or `entries`".into())),
        }
    }
}

/// Row-per-line CSV of a dense matrix (comma separated, LF terminated).
pub fn matrix_csv(rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for i in 0..rows {
        let line: Vec<String> = (0..cols).map(|j| fmt_num(at(i, j))).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses a CSV matrix written by [`matrix_csv`].
pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(row, line)| {
            line.split(',')
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("csv row {}: `{cell}`: {e}", row + 1)))
                })
                .collect()
        })
        .collect()
}

/// `index,value` CSV of a function's coefficients.
pub fn function_csv<T: Real>(f: &TreeFunction<T>) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in f.coeffs().iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_num(v.as_f64())));
    }
    out
}
