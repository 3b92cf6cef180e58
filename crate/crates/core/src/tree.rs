//! Locally constant functions on `Z_p` and `Z_p × Z_p` at a fixed level.
//!
//! A [`TreeFunction`] at level `l` holds one coefficient per ball
//! `I + p^l Z_p`; a [`TreeKernel`] holds one coefficient per product of two
//! such balls. Integrals against Haar measure are exact finite sums.

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::padic::{haar_weight, Prime};
use crate::scalar::{pairwise_sum, pairwise_sum_by, Real};

/// Rows below this count are processed on the calling thread.
const PAR_MIN_ROWS: usize = 64;

fn check_prime(a: Prime, b: Prime) -> Result<()> {
    if a != b {
        return Err(Error::PrimeMismatch { left: a.get(), right: b.get() });
    }
    Ok(())
}

fn check_finite<T: Real>(xs: &[T], what: &str) -> Result<()> {
    if let Some(pos) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("{what}: non-finite coefficient at position {pos}")));
    }
    Ok(())
}

/// Element of `D^l(Z_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeFunction<T> {
    p: Prime,
    level: u32,
    coeffs: Vec<T>,
}

impl<T: Real> TreeFunction<T> {
    pub fn new(p: Prime, level: u32, coeffs: Vec<T>) -> Result<Self> {
        let n = p.size(level)?;
        if coeffs.len() != n {
            return Err(Error::Shape(format!(
                "level-{level} function over p = {p} needs {n} coefficients, got {}",
                coeffs.len()
            )));
        }
        check_finite(&coeffs, "tree function")?;
        Ok(Self { p, level, coeffs })
    }

    pub fn zeros(p: Prime, level: u32) -> Result<Self> {
        Self::constant(p, level, T::zero())
    }

    pub fn constant(p: Prime, level: u32, c: T) -> Result<Self> {
        let n = p.size(level)?;
        Self::new(p, level, vec![c; n])
    }

    pub fn from_fn(p: Prime, level: u32, f: impl FnMut(usize) -> T) -> Result<Self> {
        let n = p.size(level)?;
        Self::new(p, level, (0..n).map(f).collect())
    }

    /// Characteristic function of the ball `index + p^level Z_p`.
    pub fn indicator(p: Prime, level: u32, index: usize) -> Result<Self> {
        let n = p.size(level)?;
        if index >= n {
            return Err(Error::Domain(format!("index {index} outside G_{level}")));
        }
        Self::from_fn(p, level, |i| if i == index { T::one() } else { T::zero() })
    }

    /// Internal constructor for coefficient vectors known to be well formed.
    pub(crate) fn from_parts(p: Prime, level: u32, coeffs: Vec<T>) -> Self {
        debug_assert_eq!(coeffs.len() as u64, p.pow_unchecked(level));
        Self { p, level, coeffs }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same function viewed at a finer level: each child ball inherits the
    /// value of its parent.
    pub fn lift(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(Error::LevelMismatch(format!("cannot lift level {} down to {level}", self.level)));
        }
        if level == self.level {
            return Ok(self.clone());
        }
        let n = self.p.size(level)?;
        let base = self.coeffs.len();
        Ok(Self::from_parts(self.p, level, (0..n).map(|i| self.coeffs[i % base]).collect()))
    }

    /// Both operands lifted to their common level.
    fn co_lift(&self, other: &Self) -> Result<(Self, Self)> {
        check_prime(self.p, other.p)?;
        let l = self.level.max(other.level);
        Ok((self.lift(l)?, other.lift(l)?))
    }

    /// `∫_{Z_p} f dx`.
    pub fn integrate(&self) -> T {
        haar_weight::<T>(self.p, self.level) * pairwise_sum(&self.coeffs)
    }

    pub fn l2_norm(&self) -> T {
        let w = haar_weight::<T>(self.p, self.level);
        (w * pairwise_sum_by(0, self.coeffs.len(), &|k| self.coeffs[k] * self.coeffs[k])).sqrt()
    }

    /// `⟨f, g⟩ = ∫ f g dx`, lifting the coarser operand.
    pub fn inner(&self, other: &Self) -> Result<T> {
        let (a, b) = self.co_lift(other)?;
        let w = haar_weight::<T>(a.p, a.level);
        Ok(w * pairwise_sum_by(0, a.coeffs.len(), &|k| a.coeffs[k] * b.coeffs[k]))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts(self.p, self.level, self.coeffs.iter().map(|&x| f(x)).collect())
    }

    /// `φ ∘ f`, coefficientwise.
    pub fn apply_activation(&self, phi: &Activation<T>) -> Self {
        self.map(|x| phi.eval(x))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        let (a, b) = self.co_lift(other)?;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| f(x, y)).collect();
        Ok(Self::from_parts(a.p, a.level, coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|x| c * x)
    }

    /// `max_I |f(I) - g(I)|` after co-lifting.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        let (a, b) = self.co_lift(other)?;
        Ok(a.coeffs.iter().zip(&b.coeffs).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs())))
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Group convolution on `G_l`:
    /// `(k * x)(I) = p^{-l} Σ_K k((I - K) mod p^l) x(K)`.
    pub fn convolve(&self, x: &Self) -> Result<Self> {
        let (k, x) = self.co_lift(x)?;
        let n = k.coeffs.len();
        let w = haar_weight::<T>(k.p, k.level);
        let row = |i: usize| w * pairwise_sum_by(0, n, &|j| k.coeffs[(i + n - j) % n] * x.coeffs[j]);
        Ok(Self::from_parts(k.p, k.level, par_rows(n, row)))
    }

    /// `Σ_{K ∈ G_l} F(K)` evaluated through the digit tree: the outer sums
    /// run over the digits `K_{l-1}, …, K_L`, the innermost over `G_L`.
    pub fn tree_sum(&self, input_level: u32) -> Result<T> {
        if input_level > self.level {
            return Err(Error::LevelMismatch(format!(
                "tree sum split at level {input_level} above function level {}",
                self.level
            )));
        }
        let p = self.p.get() as usize;
        let block = self.p.pow_unchecked(input_level) as usize;
        // Fixing the top digits K_{l-1}, …, K_j leaves a contiguous block
        // of p^j values.
        fn rec<T: Real>(c: &[T], p: usize, level: u32, stop: u32, offset: usize, block: usize) -> T {
            if level == stop {
                return pairwise_sum_by(0, block, &|low| c[offset + low]);
            }
            let stride = p.pow(level - 1);
            let mut acc = T::zero();
            for digit in 0..p {
                acc += rec(c, p, level - 1, stop, offset + digit * stride, block);
            }
            acc
        }
        Ok(rec(&self.coeffs, p, self.level, input_level, 0, block))
    }
}

fn par_rows<T: Real>(n: usize, row: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if n >= PAR_MIN_ROWS {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage<T> {
    /// Row-major `n × n`.
    Dense(Vec<T>),
    /// Compressed rows; columns sorted and unique within a row.
    Sparse { row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<T> },
}

/// Element of `D^l(Z_p × Z_p)` (row = first argument).
///
/// Kernels are dense by default. Kernels with few nonzero entries, such as
/// recast layered networks, can be stored in compressed rows; every
/// operation accepts both forms.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeKernel<T> {
    p: Prime,
    level: u32,
    storage: Storage<T>,
}

impl<T: Real> TreeKernel<T> {
    pub fn new(p: Prime, level: u32, coeffs: Vec<T>) -> Result<Self> {
        let n = p.size(level)?;
        if coeffs.len() != n * n {
            return Err(Error::Shape(format!(
                "level-{level} kernel over p = {p} needs {} coefficients, got {}",
                n * n,
                coeffs.len()
            )));
        }
        check_finite(&coeffs, "tree kernel")?;
        Ok(Self { p, level, storage: Storage::Dense(coeffs) })
    }

    /// Sparse kernel from `(row, column, value)` triples; absent entries are
    /// zero. Duplicate positions are rejected.
    pub fn from_entries(p: Prime, level: u32, mut entries: Vec<(usize, usize, T)>) -> Result<Self> {
        let n = p.size(level)?;
        if let Some(&(i, k, _)) = entries.iter().find(|&&(i, k, _)| i >= n || k >= n) {
            return Err(Error::Shape(format!("entry ({i}, {k}) outside a {n} × {n} kernel")));
        }
        entries.sort_by_key(|&(i, k, _)| (i, k));
        if entries.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Shape("duplicate kernel entry".into()));
        }
        let vals: Vec<T> = entries.iter().map(|e| e.2).collect();
        check_finite(&vals, "tree kernel")?;
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = entries.iter().map(|e| e.1).collect();
        Ok(Self { p, level, storage: Storage::Sparse { row_ptr, cols, vals } })
    }

    /// The zero kernel, stored sparsely.
    pub fn zeros(p: Prime, level: u32) -> Result<Self> {
        Self::from_entries(p, level, Vec::new())
    }

    pub fn constant(p: Prime, level: u32, c: T) -> Result<Self> {
        let n = p.size(level)?;
        Self::new(p, level, vec![c; n * n])
    }

    pub fn from_fn(p: Prime, level: u32, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let n = p.size(level)?;
        let mut coeffs = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                coeffs.push(f(i, k));
            }
        }
        Self::new(p, level, coeffs)
    }

    /// `W(I, K) = kernel((I - K) mod p^l)`, the operator of `convolve`.
    pub fn from_convolution(kernel: &TreeFunction<T>) -> Self {
        let n = kernel.len();
        let mut coeffs = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                coeffs.push(kernel.coeffs[(i + n - k) % n]);
            }
        }
        Self { p: kernel.p, level: kernel.level, storage: Storage::Dense(coeffs) }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Side length `p^l`.
    pub fn side(&self) -> usize {
        self.p.pow_unchecked(self.level) as usize
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    /// Row-major coefficients of a dense kernel.
    pub fn dense_coeffs(&self) -> Option<&[T]> {
        match &self.storage {
            Storage::Dense(c) => Some(c),
            Storage::Sparse { .. } => None,
        }
    }

    /// Row-major coefficients, materializing a sparse kernel.
    pub fn to_dense_coeffs(&self) -> Vec<T> {
        match &self.storage {
            Storage::Dense(c) => c.clone(),
            Storage::Sparse { .. } => {
                let n = self.side();
                let mut out = vec![T::zero(); n * n];
                for (i, k, v) in self.entries() {
                    out[i * n + k] = v;
                }
                out
            }
        }
    }

    /// Dense copy of this kernel.
    pub fn to_dense(&self) -> Self {
        Self { p: self.p, level: self.level, storage: Storage::Dense(self.to_dense_coeffs()) }
    }

    /// Stored `(row, column, value)` triples: every entry of a dense kernel,
    /// the explicit entries of a sparse one. Row-major order.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, usize, T)> + '_> {
        match &self.storage {
            Storage::Dense(c) => {
                let n = self.side();
                Box::new(c.iter().enumerate().map(move |(j, &v)| (j / n, j % n, v)))
            }
            Storage::Sparse { row_ptr, cols, vals } => Box::new(
                (0..row_ptr.len() - 1)
                    .flat_map(move |i| (row_ptr[i]..row_ptr[i + 1]).map(move |j| (i, cols[j], vals[j]))),
            ),
        }
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        match &self.storage {
            Storage::Dense(c) => c[i * self.side() + k],
            Storage::Sparse { row_ptr, cols, vals } => {
                let r = row_ptr[i]..row_ptr[i + 1];
                match cols[r.clone()].binary_search(&k) {
                    Ok(j) => vals[r.start + j],
                    Err(_) => T::zero(),
                }
            }
        }
    }

    /// `Σ_K W(I, K) g(K)` for row `I`, with the fixed pairwise reduction.
    fn row_dot(&self, i: usize, g: &[T]) -> T {
        match &self.storage {
            Storage::Dense(c) => {
                let n = self.side();
                let r = &c[i * n..(i + 1) * n];
                pairwise_sum_by(0, n, &|k| r[k] * g[k])
            }
            Storage::Sparse { row_ptr, cols, vals } => {
                let s = row_ptr[i];
                pairwise_sum_by(0, row_ptr[i + 1] - s, &|j| vals[s + j] * g[cols[s + j]])
            }
        }
    }

    fn row_total(&self, i: usize) -> T {
        match &self.storage {
            Storage::Dense(c) => {
                let n = self.side();
                pairwise_sum(&c[i * n..(i + 1) * n])
            }
            Storage::Sparse { row_ptr, vals, .. } => pairwise_sum(&vals[row_ptr[i]..row_ptr[i + 1]]),
        }
    }

    fn stored_values(&self) -> &[T] {
        match &self.storage {
            Storage::Dense(c) => c,
            Storage::Sparse { vals, .. } => vals,
        }
    }

    pub fn lift(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return Err(Error::LevelMismatch(format!("cannot lift level {} down to {level}", self.level)));
        }
        if level == self.level {
            return Ok(self.clone());
        }
        let base = self.side();
        let n = self.p.size(level)?;
        match &self.storage {
            Storage::Dense(c) => {
                let mut coeffs = Vec::with_capacity(n * n);
                for i in 0..n {
                    let r = &c[(i % base) * base..(i % base + 1) * base];
                    coeffs.extend((0..n).map(|k| r[k % base]));
                }
                Ok(Self { p: self.p, level, storage: Storage::Dense(coeffs) })
            }
            Storage::Sparse { .. } => {
                let copies = n / base;
                let mut entries = Vec::new();
                for (i, k, v) in self.entries() {
                    for a in 0..copies {
                        for b in 0..copies {
                            entries.push((i + a * base, k + b * base, v));
                        }
                    }
                }
                Self::from_entries(self.p, level, entries)
            }
        }
    }

    /// `(∬ |W|² dx dy)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        let w = haar_weight::<T>(self.p, self.level);
        let c = self.stored_values();
        (w * w * pairwise_sum_by(0, c.len(), &|k| c[k] * c[k])).sqrt()
    }

    pub fn scale(&self, c: T) -> Self {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|&x| c * x).collect()),
            Storage::Sparse { row_ptr, cols, vals } => Storage::Sparse {
                row_ptr: row_ptr.clone(),
                cols: cols.clone(),
                vals: vals.iter().map(|&x| c * x).collect(),
            },
        };
        Self { p: self.p, level: self.level, storage }
    }

    pub fn nonzero_count(&self) -> usize {
        self.stored_values().iter().filter(|x| !x.is_zero()).count()
    }

    /// `I ↦ ∫ W(I, y) dy`.
    pub fn row_integrals(&self) -> TreeFunction<T> {
        let n = self.side();
        let w = haar_weight::<T>(self.p, self.level);
        let sums = (0..n).map(|i| w * self.row_total(i)).collect();
        TreeFunction::from_parts(self.p, self.level, sums)
    }

    /// `(W g)(I) = p^{-l} Σ_K W(I, K) g(K)`. A coarser `g` is lifted first,
    /// which evaluates it at `Λ(K)`.
    pub fn apply(&self, g: &TreeFunction<T>) -> Result<TreeFunction<T>> {
        check_prime(self.p, g.p)?;
        if g.level > self.level {
            return Err(Error::LevelMismatch(format!(
                "function at level {} is finer than kernel at level {}",
                g.level, self.level
            )));
        }
        let g = g.lift(self.level)?;
        let w = haar_weight::<T>(self.p, self.level);
        let row = |i: usize| w * self.row_dot(i, &g.coeffs);
        Ok(TreeFunction::from_parts(self.p, self.level, par_rows(self.side(), row)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn f(p: u64, level: u32, c: &[f64]) -> TreeFunction<f64> {
        TreeFunction::new(pr(p), level, c.to_vec()).unwrap()
    }

    #[test]
    fn construction_guards() {
        assert!(TreeFunction::<f64>::new(pr(2), 2, vec![0.0; 3]).is_err());
        assert!(TreeFunction::<f64>::new(pr(2), 1, vec![0.0, f64::NAN]).is_err());
        assert!(TreeKernel::<f64>::new(pr(2), 1, vec![0.0; 3]).is_err());
        assert!(TreeFunction::<f64>::zeros(Prime::with_cap(2, 4).unwrap(), 3).is_err());
    }

    #[test]
    fn lift_examples() {
        let one = TreeFunction::<f64>::constant(pr(2), 0, 1.0).unwrap();
        assert_eq!(one.lift(2).unwrap().coeffs(), &[1.0; 4]);
        assert_eq!(f(2, 1, &[3.0, 7.0]).lift(2).unwrap().coeffs(), &[3.0, 7.0, 3.0, 7.0]);
        let g = f(3, 1, &[1.0, 2.0, 3.0]).lift(2).unwrap();
        assert_eq!(g.coeffs()[5], 3.0);
        assert!(g.lift(1).is_err());
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(TreeFunction::<f64>::constant(pr(5), 2, 2.5).unwrap().integrate(), 2.5);
        assert_eq!(f(2, 2, &[0.0, 1.0, 2.0, 3.0]).integrate(), 1.5);
        let ind = TreeFunction::<f64>::indicator(pr(3), 3, 11).unwrap();
        assert_eq!(ind.integrate(), 1.0 / 27.0);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(TreeFunction::<f64>::constant(pr(7), 1, 1.0).unwrap().l2_norm(), 1.0);
        let g = f(2, 1, &[1.0, -1.0]);
        assert_eq!(g.l2_norm(), 1.0);
        assert_eq!(g.inner(&g).unwrap(), g.l2_norm().powi(2));
        let other = TreeFunction::<f64>::zeros(pr(3), 1).unwrap();
        assert!(matches!(g.inner(&other), Err(Error::PrimeMismatch { .. })));
    }

    #[test]
    fn kernel_norm_examples() {
        let c = TreeKernel::<f64>::constant(pr(3), 2, -1.5).unwrap();
        assert!((c.l2_norm() - 1.5).abs() < 1e-15);
        assert_eq!(TreeKernel::<f64>::zeros(pr(2), 2).unwrap().l2_norm(), 0.0);
        let single = TreeKernel::<f64>::from_fn(pr(2), 1, |i, k| if (i, k) == (1, 0) { 3.0 } else { 0.0 }).unwrap();
        assert_eq!(single.l2_norm(), 1.5);
    }

    #[test]
    fn apply_examples() {
        let ones = TreeKernel::<f64>::constant(pr(2), 1, 1.0).unwrap();
        let out = ones.apply(&f(2, 1, &[0.0, 1.0])).unwrap();
        assert_eq!(out.coeffs(), &[0.5, 0.5]);

        let zero = TreeKernel::<f64>::zeros(pr(2), 2).unwrap();
        assert_eq!(zero.apply(&f(2, 1, &[4.0, 5.0])).unwrap().coeffs(), &[0.0; 4]);

        // Coarse input against a level-2 kernel, checked against a flat sum.
        let (a, b) = (0.7, -1.3);
        let w = TreeKernel::<f64>::from_fn(pr(2), 2, |i, k| (i * 4 + k) as f64 * 0.25 - 1.0).unwrap();
        let out = w.apply(&f(2, 1, &[a, b])).unwrap();
        for i in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                s += w.get(i, k) * if k % 2 == 0 { a } else { b };
            }
            assert!((out.coeffs()[i] - 0.25 * s).abs() < 1e-15);
        }

        let fine = TreeFunction::<f64>::zeros(pr(2), 3).unwrap();
        assert!(matches!(w.apply(&fine), Err(Error::LevelMismatch(_))));
    }

    #[test]
    fn activation_examples() {
        let g = f(2, 1, &[-3.0, 0.5]);
        assert_eq!(g.apply_activation(&Activation::identity()), g);
        let h = TreeFunction::new(pr(3), 1, vec![-3.0, 0.5, 3.0]).unwrap();
        assert_eq!(h.apply_activation(&Activation::pwl_sigmoid()).coeffs(), &[-1.0, 0.5, 1.0]);
        let z = TreeFunction::<f64>::zeros(pr(2), 2).unwrap();
        assert_eq!(z.apply_activation(&Activation::tanh()), z);
    }

    #[test]
    fn convolve_examples() {
        let x = f(3, 1, &[1.0, 2.0, 6.0]);
        let ones = TreeFunction::<f64>::constant(pr(3), 1, 1.0).unwrap();
        let avg = ones.convolve(&x).unwrap();
        for v in avg.coeffs() {
            assert!((v - x.integrate()).abs() < 1e-15);
        }

        let k = f(2, 2, &[0.5, -1.0, 2.0, 0.25]);
        let delta = TreeFunction::from_fn(pr(2), 2, |i| if i == 0 { 4.0 } else { 0.0 }).unwrap();
        assert_eq!(k.convolve(&delta).unwrap(), k);

        let zero = TreeFunction::<f64>::zeros(pr(3), 1).unwrap();
        assert_eq!(zero.convolve(&x).unwrap().coeffs(), &[0.0; 3]);
    }

    #[test]
    fn tree_sum_examples() {
        let ones = TreeFunction::<f64>::constant(pr(2), 3, 1.0).unwrap();
        assert_eq!(ones.tree_sum(0).unwrap(), 8.0);
        assert_eq!(ones.tree_sum(3).unwrap(), 8.0);
        let g = TreeFunction::from_fn(pr(3), 2, |i| (i * i) as f64 - 3.5).unwrap();
        let flat: f64 = g.coeffs().iter().sum();
        for split in 0..=2 {
            assert!((g.tree_sum(split).unwrap() - flat).abs() < 4.0 * 9.0 * f64::EPSILON * flat.abs());
        }
        assert!(g.tree_sum(3).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let p = pr(3);
        let entries = vec![(0, 4, 1.5), (4, 0, -2.0), (7, 7, 0.25), (8, 1, 3.0)];
        let sparse = TreeKernel::<f64>::from_entries(p, 2, entries.clone()).unwrap();
        let dense = sparse.to_dense();
        assert!(sparse.is_sparse() && !dense.is_sparse());
        assert_eq!(sparse.get(4, 0), -2.0);
        assert_eq!(sparse.get(4, 1), 0.0);
        assert_eq!(sparse.nonzero_count(), 4);
        assert_eq!(dense.nonzero_count(), 4);
        assert!((sparse.l2_norm() - dense.l2_norm()).abs() < 1e-15);
        let g = TreeFunction::from_fn(p, 1, |i| i as f64 - 0.5).unwrap();
        assert!(sparse.apply(&g).unwrap().max_abs_diff(&dense.apply(&g).unwrap()).unwrap() < 1e-15);
        assert_eq!(sparse.row_integrals(), dense.row_integrals());
        assert_eq!(sparse.lift(3).unwrap().to_dense(), dense.lift(3).unwrap());
        assert_eq!(sparse.scale(2.0).get(8, 1), 6.0);

        assert!(TreeKernel::<f64>::from_entries(p, 1, vec![(3, 0, 1.0)]).is_err());
        assert!(TreeKernel::<f64>::from_entries(p, 1, vec![(1, 0, 1.0), (1, 0, 2.0)]).is_err());
    }

    #[test]
    fn row_integrals_of_constant_kernel() {
        let w = TreeKernel::<f64>::constant(pr(2), 2, 0.5).unwrap();
        assert_eq!(w.row_integrals().coeffs(), &[0.5; 4]);
    }
}
