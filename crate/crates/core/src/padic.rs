//! Finite quotient groups `G_l = Z_p / p^l Z_p`.
//!
//! An element of `G_l` is stored as its integer value in `[0, p^l)`; the
//! base-`p` digits of the value are the first `l` digits of a p-adic integer.
//! Integer value order is the canonical order of every coefficient vector in
//! this crate, so truncation is a `mod` and the children of a ball occupy a
//! strided set of positions.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default bound on `p^l` (the number of coefficients of a level-`l` object).
pub const DEFAULT_MAX_COEFFS: u64 = 1 << 24;

/// A prime `p` together with the capacity guard for `p^l`.
///
/// Equality compares only `p`.
#[derive(Clone, Copy)]
pub struct Prime {
    p: u64,
    max_coeffs: u64,
}

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        Self::with_cap(p, DEFAULT_MAX_COEFFS)
    }

    /// A prime with a custom bound on `p^l`.
    pub fn with_cap(p: u64, max_coeffs: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Self { p, max_coeffs })
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.p
    }

    pub fn max_coeffs(self) -> u64 {
        self.max_coeffs
    }

    /// `p^level`, or a capacity error when it exceeds the cap.
    pub fn size(self, level: u32) -> Result<usize> {
        let cap_err = Error::Capacity { p: self.p, level, cap: self.max_coeffs };
        match self.p.checked_pow(level) {
            Some(n) if n <= self.max_coeffs => usize::try_from(n).map_err(|_| cap_err),
            _ => Err(cap_err),
        }
    }

    /// `p^level` for a level already validated against the cap.
    #[inline]
    pub(crate) fn pow_unchecked(self, level: u32) -> u64 {
        self.p.pow(level)
    }

    /// Largest level whose size fits under the cap.
    pub fn max_level(self) -> u32 {
        let mut l = 0;
        while self.size(l + 1).is_ok() {
            l += 1;
        }
        l
    }

    /// Smallest prime strictly greater than `n`.
    pub fn next_above(n: u64) -> Result<Self> {
        let mut c = n + 1;
        while !is_prime(c) {
            c += 1;
        }
        Self::new(c)
    }
}

impl PartialEq for Prime {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl Eq for Prime {}

impl fmt::Debug for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime({})", self.p)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// An element of `G_l`: a neuron address / a ball `I + p^l Z_p`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PadicIndex {
    p: Prime,
    level: u32,
    value: u64,
}

impl PadicIndex {
    pub fn new(p: Prime, level: u32, value: u64) -> Result<Self> {
        let n = p.size(level)? as u64;
        if value >= n {
            return Err(Error::Domain(format!("value {value} outside G_{level} (size {n})")));
        }
        Ok(Self { p, level, value })
    }

    /// Builds an index from its base-`p` digits `I_0, …, I_{l-1}`.
    pub fn from_digits(p: Prime, digits: &[u64]) -> Result<Self> {
        let mut value = 0u64;
        for (j, &d) in digits.iter().enumerate() {
            if d >= p.get() {
                return Err(Error::Domain(format!("digit {d} is not below p = {p}")));
            }
            value += d * p.get().pow(j as u32);
        }
        Self::new(p, digits.len() as u32, value)
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// The `j`-th base-`p` digit; zero for `j >= level`.
    pub fn digit(&self, j: u32) -> u64 {
        if j >= self.level {
            return 0;
        }
        (self.value / self.p.pow_unchecked(j)) % self.p.get()
    }

    pub fn digits(&self) -> Vec<u64> {
        (0..self.level).map(|j| self.digit(j)).collect()
    }

    /// Truncation to the first `m` digits (`Λ_{l,m}`); the identity when
    /// `m >= level`.
    pub fn project(&self, m: u32) -> PadicIndex {
        if m >= self.level {
            return *self;
        }
        PadicIndex { p: self.p, level: m, value: self.value % self.p.pow_unchecked(m) }
    }

    /// The `p` indices one level down that project back onto `self`.
    pub fn children(&self) -> Result<Vec<PadicIndex>> {
        let level = self.level + 1;
        self.p.size(level)?;
        let stride = self.p.pow_unchecked(self.level);
        Ok((0..self.p.get())
            .map(|z| PadicIndex { p: self.p, level, value: self.value + z * stride })
            .collect())
    }

    /// Every descendant of `self` at `level`, in increasing value order.
    pub fn descendants(&self, level: u32) -> Result<Vec<PadicIndex>> {
        if level < self.level {
            return Err(Error::LevelMismatch(format!(
                "descendants at level {level} requested from level {}",
                self.level
            )));
        }
        self.p.size(level)?;
        let stride = self.p.pow_unchecked(self.level);
        let count = self.p.pow_unchecked(level - self.level);
        Ok((0..count)
            .map(|z| PadicIndex { p: self.p, level, value: self.value + z * stride })
            .collect())
    }
}

impl fmt::Display for PadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.value, self.p, self.level)
    }
}

/// Input level `L` and depth `Δ` of a discrete network; the total level is
/// `L + Δ`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LevelPair {
    input: u32,
    depth: u32,
}

impl LevelPair {
    pub fn new(p: Prime, input: u32, depth: u32) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Domain("network depth must be at least 1".into()));
        }
        p.size(input + depth)?;
        Ok(Self { input, depth })
    }

    pub fn input(&self) -> u32 {
        self.input
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn total(&self) -> u32 {
        self.input + self.depth
    }
}

/// Haar measure `p^{-l}` of a level-`l` ball.
pub fn haar_weight<T: Real>(p: Prime, level: u32) -> T {
    match (p.get() as u128).checked_pow(level) {
        Some(n) => T::one() / T::of(n as f64),
        None => T::of(p.get() as f64).powi(-(level as i32)),
    }
}

/// All of `G_l` in canonical (value) order.
pub fn enumerate_level(p: Prime, level: u32) -> Result<impl Iterator<Item = PadicIndex>> {
    let n = p.size(level)? as u64;
    Ok((0..n).map(move |value| PadicIndex { p, level, value }))
}
