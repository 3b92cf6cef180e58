//! Recasting layered feedforward and recurrent networks as p-adic networks.
//!
//! A layered network `h^(j) = W^(j) φ(h^(j-1)) + ξ^(j)`, `j = 1..Δ`, is
//! rewritten on the tree `G_{Δ+1}`: neuron `i` of layer `j` gets an address
//! `𝔍_j(i) ∈ G_{j+1}` whose lower digits are the address of one of its
//! parents and whose top digit is `i` itself. All weights go into a single
//! kernel at level `Δ + 1` (input level `L = 1`), scaled by `p^{Δ+1}` so
//! that the Haar-weighted kernel action reproduces the matrix product.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::padic::{LevelPair, Prime};
use crate::scalar::Real;
use crate::solver::NetworkParams;
use crate::tree::{TreeFunction, TreeKernel};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{rows} × {cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> T {
        self.data[i * self.cols + k]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }

    /// The sub-matrix with top-left corner `(r, c)`.
    pub fn block(&self, r: usize, c: usize, rows: usize, cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in r..r + rows {
            data.extend_from_slice(&self.data[i * self.cols + c..i * self.cols + c + cols]);
        }
        Self { rows, cols, data }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().zip(v).fold(T::zero(), |a, (&w, &x)| a + w * x)).collect()
    }
}

/// Block-diagonal `A ⊕ B ⊕ …`, blocks in the given order.
pub fn direct_sum<T: Real>(blocks: &[Matrix<T>]) -> Result<Matrix<T>> {
    if blocks.is_empty() {
        return Err(Error::Domain("direct sum of an empty list".into()));
    }
    let rows: usize = blocks.iter().map(|b| b.rows).sum();
    let cols: usize = blocks.iter().map(|b| b.cols).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        for i in 0..b.rows {
            for k in 0..b.cols {
                out.data[(r0 + i) * cols + c0 + k] = b.get(i, k);
            }
        }
        r0 += b.rows;
        c0 += b.cols;
    }
    Ok(out)
}

/// A layered network `h^(j) = W^(j) φ(h^(j-1)) + ξ^(j)`.
#[derive(Clone, Debug)]
pub struct LayeredNet<T> {
    widths: Vec<usize>,
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
    phi: Activation<T>,
    tied: bool,
}

impl<T: Real> LayeredNet<T> {
    /// `widths = [n_0, …, n_Δ]`, `weights[j]` of shape `n_{j+1} × n_j`.
    pub fn new(widths: Vec<usize>, weights: Vec<Matrix<T>>, biases: Vec<Vec<T>>, phi: Activation<T>) -> Result<Self> {
        Self::build(widths, weights, biases, phi, false)
    }

    /// A recurrent network unrolled for `steps` steps with one weight matrix
    /// and one bias vector shared by every step.
    pub fn tied(width: usize, steps: usize, weight: Matrix<T>, bias: Vec<T>, phi: Activation<T>) -> Result<Self> {
        Self::build(vec![width; steps + 1], vec![weight; steps], vec![bias; steps], phi, true)
    }

    fn build(widths: Vec<usize>, weights: Vec<Matrix<T>>, biases: Vec<Vec<T>>, phi: Activation<T>, tied: bool) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Shape("a layered net needs at least two layers".into()));
        }
        if widths.contains(&0) {
            return Err(Error::Shape("layer widths must be at least 1".into()));
        }
        let depth = widths.len() - 1;
        if weights.len() != depth || biases.len() != depth {
            return Err(Error::Shape(format!(
                "{depth} layers need {depth} weight matrices and bias vectors, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for j in 0..depth {
            let w = &weights[j];
            if w.rows != widths[j + 1] || w.cols != widths[j] {
                return Err(Error::Shape(format!(
                    "weight {j} is {} × {}, expected {} × {}",
                    w.rows,
                    w.cols,
                    widths[j + 1],
                    widths[j]
                )));
            }
            if biases[j].len() != widths[j + 1] {
                return Err(Error::Shape(format!("bias {j} has length {}, expected {}", biases[j].len(), widths[j + 1])));
            }
        }
        if tied && (widths.iter().any(|&n| n != widths[0]) || weights.iter().any(|w| w != &weights[0])) {
            return Err(Error::Shape("a tied network needs equal widths and one shared weight matrix".into()));
        }
        Ok(Self { widths, weights, biases, phi, tied })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn phi(&self) -> &Activation<T> {
        &self.phi
    }

    pub fn is_tied(&self) -> bool {
        self.tied
    }

    pub fn max_width(&self) -> usize {
        *self.widths.iter().max().expect("non-empty widths")
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().map(Matrix::nonzero_count).sum()
    }

    /// Pre-activations of every layer; entry 0 is the input itself.
    pub fn forward(&self, input: &[T]) -> Result<Vec<Vec<T>>> {
        if input.len() != self.widths[0] {
            return Err(Error::Shape(format!("input of length {} for width {}", input.len(), self.widths[0])));
        }
        let mut layers = vec![input.to_vec()];
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let act: Vec<T> = layers.last().unwrap().iter().map(|&s| self.phi.eval(s)).collect();
            let h = w.mul_vec(&act).into_iter().zip(b).map(|(s, &c)| s + c).collect();
            layers.push(h);
        }
        Ok(layers)
    }
}

/// Addresses `𝔍_j(i)` of every neuron, as values in `G_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeuronMap {
    p: Prime,
    layers: Vec<Vec<u64>>,
}

impl NeuronMap {
    pub fn prime(&self) -> Prime {
        self.p
    }

    /// `layers()[j][i]` is the address of neuron `i` (0-based) in layer `j`.
    pub fn layers(&self) -> &[Vec<u64>] {
        &self.layers
    }

    pub fn layer(&self, j: usize) -> &[u64] {
        &self.layers[j]
    }

    /// Level of the tree holding every address, `Δ + 1`.
    pub fn level(&self) -> u32 {
        self.layers.len() as u32
    }
}

fn check_prime_for<T: Real>(net: &LayeredNet<T>, p: Prime) -> Result<()> {
    let max_width = net.max_width();
    if p.get() as usize <= max_width {
        return Err(Error::PrimeTooSmall {
            given: p.get(),
            max_width,
            minimal: Prime::next_above(max_width as u64)?.get(),
        });
    }
    Ok(())
}

/// The parent whose address a neuron extends: the predecessor with the
/// largest `|W_{i,k}|`, ties to the smallest `k`; `k = 0` for a row of zeros.
fn parent_of<T: Real>(w: &Matrix<T>, i: usize) -> usize {
    let mut best = 0;
    let mut best_abs = T::zero();
    for (k, v) in w.row(i).iter().enumerate() {
        if v.abs() > best_abs {
            best = k;
            best_abs = v.abs();
        }
    }
    best
}

/// Assigns tree addresses: layer 0 maps neuron `i` to `i + 1 ∈ G_1`; neuron
/// `i` of layer `j` maps to `𝔍_{j-1}(parent) + (i + 1) p^j`.
pub fn build_neuron_map<T: Real>(net: &LayeredNet<T>, p: Prime) -> Result<NeuronMap> {
    check_prime_for(net, p)?;
    p.size(net.depth() as u32 + 1)?;
    let mut layers: Vec<Vec<u64>> = vec![(1..=net.widths[0] as u64).collect()];
    for j in 1..=net.depth() {
        let stride = p.get().pow(j as u32);
        let prev = &layers[j - 1];
        let w = &net.weights[j - 1];
        let layer = (0..net.widths[j]).map(|i| prev[parent_of(w, i)] + (i as u64 + 1) * stride).collect();
        layers.push(layer);
    }
    Ok(NeuronMap { p, layers })
}

/// A layered network in tree form.
#[derive(Clone, Debug)]
pub struct RecastResult<T> {
    /// `L = 1`, `Δ` = source depth, `W_in = 0`, `W_out = 0`, `ξ_out = 0`.
    pub params: NetworkParams<T>,
    pub neuron_map: NeuronMap,
    /// `W^(Δ) ⊕ … ⊕ W^(1)`.
    pub block_matrix: Matrix<T>,
    pub nonzero_count: usize,
}

impl<T: Real> RecastResult<T> {
    /// Per-layer pre-activations read at the mapped addresses.
    ///
    /// Runs `Δ` applications of the tree forward map; after step `j` only
    /// the addresses of layer `j` are updated, so each step sees exactly the
    /// previous layer's activations.
    pub fn forward(&self, input: &[T]) -> Result<Vec<Vec<T>>> {
        let map = &self.neuron_map;
        if input.len() != map.layers[0].len() {
            return Err(Error::Shape(format!("input of length {} for width {}", input.len(), map.layers[0].len())));
        }
        let p = self.params.prime();
        let level = self.params.level();
        let mut coeffs = vec![T::zero(); p.size(level)?];
        for (&addr, &v) in map.layers[0].iter().zip(input) {
            coeffs[addr as usize] = v;
        }
        let mut h = TreeFunction::new(p, level, coeffs)?;
        let x = TreeFunction::zeros(p, self.params.levels().input())?;
        for j in 1..map.layers.len() {
            let next = self.params.forward_map(&x, &h)?;
            let mut c = h.into_coeffs();
            for &addr in &map.layers[j] {
                c[addr as usize] = next.coeffs()[addr as usize];
            }
            h = TreeFunction::new(p, level, c)?;
        }
        Ok(map.layers.iter().map(|layer| layer.iter().map(|&a| h.coeffs()[a as usize]).collect()).collect())
    }

    /// Whether the `Δ` diagonal blocks of the direct sum are identical.
    pub fn diagonal_blocks_identical(&self, widths: &[usize]) -> bool {
        let blocks = diagonal_blocks(&self.block_matrix, widths);
        blocks.windows(2).all(|w| w[0] == w[1])
    }
}

/// Diagonal blocks of `W^(Δ) ⊕ … ⊕ W^(1)` in storage order.
fn diagonal_blocks<T: Real>(m: &Matrix<T>, widths: &[usize]) -> Vec<Matrix<T>> {
    let depth = widths.len() - 1;
    let (mut r, mut c) = (0, 0);
    let mut out = Vec::with_capacity(depth);
    for j in (1..=depth).rev() {
        out.push(m.block(r, c, widths[j], widths[j - 1]));
        r += widths[j];
        c += widths[j - 1];
    }
    out
}

/// Rewrites `net` as a p-adic discrete network over `G_{Δ+1}`.
pub fn recast<T: Real>(net: &LayeredNet<T>, p: Prime) -> Result<RecastResult<T>> {
    let neuron_map = build_neuron_map(net, p)?;
    let depth = net.depth() as u32;
    let levels = LevelPair::new(p, 1, depth)?;
    let level = levels.total();
    let scale = T::of(p.get() as f64).powi(level as i32);

    let mut entries = Vec::with_capacity(net.nonzero_count());
    let mut bias = vec![T::zero(); p.size(level)?];
    for j in 1..=net.depth() {
        let w = &net.weights[j - 1];
        let rows = neuron_map.layer(j);
        let cols = neuron_map.layer(j - 1);
        for (i, &row) in rows.iter().enumerate() {
            for (k, &col) in cols.iter().enumerate() {
                let v = w.get(i, k);
                if !v.is_zero() {
                    entries.push((row as usize, col as usize, scale * v));
                }
            }
            bias[row as usize] = net.biases[j - 1][i];
        }
    }
    let kernel = TreeKernel::from_entries(p, level, entries)?;
    let nonzero_count = kernel.nonzero_count();
    let params = NetworkParams::builder(p, 1, depth)
        .phi(net.phi.clone())
        .varphi(net.phi.clone())
        .weights(kernel)
        .bias(TreeFunction::new(p, level, bias)?)
        .build()?;
    let blocks: Vec<Matrix<T>> = net.weights.iter().rev().cloned().collect();
    Ok(RecastResult { params, neuron_map, block_matrix: direct_sum(&blocks)?, nonzero_count })
}

/// Per-layer agreement between a layered network and its recast form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EquivalenceReport {
    pub p: u64,
    pub inputs: usize,
    /// `max |layered - recast|` per layer over all inputs; layer 0 is the input.
    pub layer_max_deviation: Vec<f64>,
    pub max_deviation: f64,
    pub source_nonzero: usize,
    pub recast_nonzero: usize,
    pub nonzero_preserved: bool,
    pub tied: bool,
    /// Set for tied networks: all diagonal blocks of the direct sum agree.
    pub tied_blocks_identical: Option<bool>,
}

pub fn verify_equivalence<T: Real>(net: &LayeredNet<T>, result: &RecastResult<T>, inputs: &[Vec<T>]) -> Result<EquivalenceReport> {
    let mut dev = vec![0.0f64; net.depth() + 1];
    for input in inputs {
        let a = net.forward(input)?;
        let b = result.forward(input)?;
        for (j, (la, lb)) in a.iter().zip(&b).enumerate() {
            for (&x, &y) in la.iter().zip(lb) {
                dev[j] = dev[j].max((x - y).abs().as_f64());
            }
        }
    }
    let source_nonzero = net.nonzero_count();
    Ok(EquivalenceReport {
        p: result.params.prime().get(),
        inputs: inputs.len(),
        max_deviation: dev.iter().copied().fold(0.0, f64::max),
        layer_max_deviation: dev,
        source_nonzero,
        recast_nonzero: result.nonzero_count,
        nonzero_preserved: source_nonzero == result.nonzero_count,
        tied: net.tied,
        tied_blocks_identical: net.tied.then(|| result.diagonal_blocks_identical(&net.widths)),
    })
}

/// Wire form of a [`LayeredNet`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayeredJson {
    pub widths: Vec<usize>,
    /// One matrix per layer as a list of rows; a tied network may give a
    /// single matrix.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub phi: String,
    #[serde(default)]
    pub tied: bool,
}

impl LayeredJson {
    pub fn to_net<T: Real>(&self) -> Result<LayeredNet<T>> {
        let phi = Activation::by_name(&self.phi)?;
        let conv = |m: &Vec<Vec<f64>>| -> Result<Matrix<T>> {
            Matrix::from_rows(&m.iter().map(|r| r.iter().map(|&x| T::of(x)).collect()).collect::<Vec<_>>())
        };
        let weights = self.weights.iter().map(conv).collect::<Result<Vec<_>>>()?;
        let biases: Vec<Vec<T>> = self.biases.iter().map(|b| b.iter().map(|&x| T::of(x)).collect()).collect();
        if self.tied {
            let steps = self.widths.len().saturating_sub(1);
            let width = *self.widths.first().ok_or_else(|| Error::Shape("empty widths".into()))?;
            if weights.is_empty() || biases.is_empty() {
                return Err(Error::Shape("tied network needs one weight matrix and one bias".into()));
            }
            let all_same = weights.iter().all(|w| w == &weights[0]) && biases.iter().all(|b| b == &biases[0]);
            if !all_same || (weights.len() != 1 && weights.len() != steps) {
                return Err(Error::Shape("tied network needs one shared weight matrix and bias".into()));
            }
            if self.widths.iter().any(|&n| n != width) {
                return Err(Error::Shape("tied network needs equal widths".into()));
            }
            return LayeredNet::tied(width, steps, weights[0].clone(), biases[0].clone(), phi);
        }
        LayeredNet::new(self.widths.clone(), weights, biases, phi)
    }
}

impl<T: Real> From<&LayeredNet<T>> for LayeredJson {
    fn from(n: &LayeredNet<T>) -> Self {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        Self {
            widths: n.widths.clone(),
            weights: n.weights.iter().map(|m| (0..m.rows).map(|i| f(m.row(i))).collect()).collect(),
            biases: n.biases.iter().map(|b| f(b)).collect(),
            phi: n.phi.name().to_string(),
            tied: n.tied,
        }
    }
}

/// Wire form of a [`NeuronMap`]: `{ "p", "level", "layers": { "0": […], … } }`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NeuronMapJson {
    pub p: u64,
    pub level: u32,
    pub layers: BTreeMap<String, Vec<u64>>,
}

impl From<&NeuronMap> for NeuronMapJson {
    fn from(m: &NeuronMap) -> Self {
        Self {
            p: m.p.get(),
            level: m.level(),
            layers: m.layers.iter().enumerate().map(|(j, l)| (j.to_string(), l.clone())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicIndex;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    #[test]
    fn direct_sum_examples() {
        let d = direct_sum(&[m(&[&[1.0]]), m(&[&[2.0]])]).unwrap();
        assert_eq!(d, m(&[&[1.0, 0.0], &[0.0, 2.0]]));
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(direct_sum(std::slice::from_ref(&a)).unwrap(), a);
        let d = direct_sum(&[m(&[&[1.0], &[2.0]]), m(&[&[3.0, 4.0]])]).unwrap();
        assert_eq!(d, m(&[&[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0], &[0.0, 3.0, 4.0]]));
        assert!(direct_sum::<f64>(&[]).is_err());
    }

    #[test]
    fn neuron_map_two_by_two() {
        // Neuron 0 of layer 1 leans on input 1, neuron 1 on input 0.
        let net = LayeredNet::new(
            vec![2, 2],
            vec![m(&[&[0.1, 0.5], &[2.0, -1.0]])],
            vec![vec![0.0, 0.0]],
            Activation::tanh(),
        )
        .unwrap();
        let map = build_neuron_map(&net, pr(3)).unwrap();
        assert_eq!(map.layer(0), &[1, 2]);
        assert_eq!(map.layer(1), &[2 + 3, 1 + 2 * 3]);
        for (j, layer) in map.layers().iter().enumerate() {
            for &a in layer {
                let idx = PadicIndex::new(pr(3), j as u32 + 1, a).unwrap();
                assert_ne!(idx.digit(j as u32), 0);
            }
        }
    }

    #[test]
    fn neuron_map_chain() {
        for p in [2u64, 3, 5] {
            let depth = 3;
            let net = LayeredNet::new(vec![1; depth + 1], vec![m(&[&[1.0]]); depth], vec![vec![0.0]; depth], Activation::tanh()).unwrap();
            let map = build_neuron_map(&net, pr(p)).unwrap();
            for j in 0..=depth {
                let expect: u64 = (0..=j as u32).map(|e| p.pow(e)).sum();
                assert_eq!(map.layer(j), &[expect]);
            }
        }
    }

    #[test]
    fn neuron_map_zero_weights_and_small_prime() {
        let net = LayeredNet::new(vec![2, 3], vec![Matrix::zeros(3, 2)], vec![vec![0.0; 3]], Activation::tanh()).unwrap();
        let map = build_neuron_map(&net, pr(5)).unwrap();
        assert_eq!(map.layer(1), &[1 + 5, 1 + 10, 1 + 15]);
        match build_neuron_map(&net, pr(3)) {
            Err(Error::PrimeTooSmall { minimal, .. }) => assert_eq!(minimal, 5),
            other => panic!("expected PrimeTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn single_layer_example() {
        let net = LayeredNet::new(vec![1, 1], vec![m(&[&[2.0]])], vec![vec![0.3]], Activation::tanh()).unwrap();
        let r = recast(&net, pr(2)).unwrap();
        let out = r.forward(&[0.5]).unwrap();
        let oracle = 2.0 * 0.5f64.tanh() + 0.3;
        assert!((out[1][0] - oracle).abs() < 1e-12);
        assert!((oracle - 1.224234).abs() < 1e-6);
        let rep = verify_equivalence(&net, &r, &[vec![0.5]]).unwrap();
        assert!(rep.max_deviation < 1e-12);
        assert!(rep.nonzero_preserved);
    }

    #[test]
    fn zero_weights_give_biases() {
        let biases = vec![vec![0.4, -0.2], vec![1.5]];
        let net = LayeredNet::new(vec![2, 2, 1], vec![Matrix::zeros(2, 2), Matrix::zeros(1, 2)], biases.clone(), Activation::tanh()).unwrap();
        let r = recast(&net, pr(3)).unwrap();
        let out = r.forward(&[0.3, 0.9]).unwrap();
        assert_eq!(out[1], biases[0]);
        assert_eq!(out[2], biases[1]);
        assert_eq!(r.nonzero_count, 0);
        let rep = verify_equivalence(&net, &r, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn kernel_scale_round_trip() {
        let net = LayeredNet::new(vec![2, 2], vec![m(&[&[0.1, -0.7], &[1.0 / 3.0, 2.5]])], vec![vec![0.0; 2]], Activation::tanh()).unwrap();
        for p in [3u64, 5, 7] {
            let r = recast(&net, pr(p)).unwrap();
            let haar = crate::padic::haar_weight::<f64>(pr(p), r.params.level());
            let map = &r.neuron_map;
            for i in 0..2 {
                for k in 0..2 {
                    let v = r.params.weights().get(map.layer(1)[i] as usize, map.layer(0)[k] as usize);
                    let w = net.weights()[0].get(i, k);
                    let back = v * haar;
                    assert!((back - w).abs() <= f64::EPSILON * w.abs(), "p={p} {back} vs {w}");
                }
            }
        }
    }

    #[test]
    fn tied_rnn() {
        let w = m(&[&[0.5, -0.3], &[0.8, 0.1]]);
        let net = LayeredNet::tied(2, 3, w, vec![0.1, -0.2], Activation::tanh()).unwrap();
        let r = recast(&net, pr(3)).unwrap();
        let rep = verify_equivalence(&net, &r, &[vec![0.3, -0.6], vec![1.0, 2.0]]).unwrap();
        assert!(rep.max_deviation < 1e-12);
        assert_eq!(rep.tied_blocks_identical, Some(true));
        assert!(r.diagonal_blocks_identical(net.widths()));
        assert_eq!(r.block_matrix.rows(), 6);
    }

    #[test]
    fn json_round_trip_and_tied_shorthand() {
        let j = LayeredJson {
            widths: vec![2, 2, 2],
            weights: vec![vec![vec![1.0, 0.0], vec![0.5, 1.0]]],
            biases: vec![vec![0.0, 0.1]],
            phi: "tanh".into(),
            tied: true,
        };
        let net: LayeredNet<f64> = j.to_net().unwrap();
        assert_eq!(net.depth(), 2);
        assert!(net.is_tied());
        let back = LayeredJson::from(&net);
        assert_eq!(back.weights.len(), 2);
        let untied = LayeredJson { tied: false, ..j };
        assert!(untied.to_net::<f64>().is_err());
    }

    #[test]
    fn shape_errors() {
        assert!(LayeredNet::new(vec![2], vec![], vec![], Activation::<f64>::tanh()).is_err());
        assert!(LayeredNet::new(vec![2, 1], vec![Matrix::zeros(2, 1)], vec![vec![0.0]], Activation::<f64>::tanh()).is_err());
        assert!(LayeredNet::new(vec![2, 1], vec![Matrix::zeros(1, 2)], vec![vec![0.0; 2]], Activation::<f64>::tanh()).is_err());
        let net = LayeredNet::new(vec![2, 1], vec![Matrix::zeros(1, 2)], vec![vec![0.0]], Activation::<f64>::tanh()).unwrap();
        assert!(net.forward(&[1.0]).is_err());
        let r = recast(&net, pr(3)).unwrap();
        assert!(verify_equivalence(&net, &r, &[vec![1.0, 2.0, 3.0]]).is_err());
    }
}
