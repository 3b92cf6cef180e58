//! The edge-detector toy network `h = a φ(h) + (W_in * x) + ξ` with the
//! saturating linear sigmoid: closed-form states, the state poset for
//! `a > 1`, and grayscale edge detection.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::padic::{LevelPair, Prime};
use crate::pgm::GrayImage;
use crate::scalar::Real;
use crate::solver::NetworkParams;
use crate::tree::{TreeFunction, TreeKernel};

/// Labelings enumerated in full when their count is at most this.
pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Posets up to this size get the brute-force meet/join search.
const LATTICE_SEARCH_MAX: usize = 256;
/// Up to this size partial-order axioms are checked over all state triples.
const TRIPLE_CHECK_MAX: usize = 729;

#[derive(Clone, Debug)]
pub struct ToyParams<T> {
    a: T,
    p: Prime,
    level: u32,
    w_in: TreeFunction<T>,
    xi: TreeFunction<T>,
}

impl<T: Real> ToyParams<T> {
    /// `w_in` and `xi` are lifted to `level`. `a = 0` is accepted (no
    /// self-coupling).
    pub fn new(a: T, level: u32, w_in: TreeFunction<T>, xi: TreeFunction<T>) -> Result<Self> {
        if !a.is_finite() || a < T::zero() {
            return Err(Error::Domain(format!("self-coupling a must be finite and non-negative, got {a}")));
        }
        let p = w_in.prime();
        if xi.prime() != p {
            return Err(Error::PrimeMismatch { left: p.get(), right: xi.prime().get() });
        }
        if w_in.level() > level || xi.level() > level {
            return Err(Error::LevelMismatch(format!("toy level {level} is coarser than its kernel or bias")));
        }
        Ok(Self { a, p, level, w_in: w_in.lift(level)?, xi: xi.lift(level)? })
    }

    /// Zero kernel and bias at `level`.
    pub fn zero(a: T, p: Prime, level: u32) -> Result<Self> {
        Self::new(a, level, TreeFunction::zeros(p, level)?, TreeFunction::zeros(p, level)?)
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn input_kernel(&self) -> &TreeFunction<T> {
        &self.w_in
    }

    pub fn bias(&self) -> &TreeFunction<T> {
        &self.xi
    }

    /// `b = W_in * x + ξ`.
    pub fn drive(&self, x: &TreeFunction<T>) -> Result<DriveField<T>> {
        if x.prime() != self.p {
            return Err(Error::PrimeMismatch { left: self.p.get(), right: x.prime().get() });
        }
        if x.level() > self.level {
            return Err(Error::LevelMismatch(format!("input at level {} is finer than the toy level {}", x.level(), self.level)));
        }
        let b = self.w_in.convolve(&x.lift(self.level)?)?.add(&self.xi)?;
        Ok(DriveField { b })
    }

    /// A drive given directly, e.g. `b ≡ c`.
    pub fn drive_from(&self, b: TreeFunction<T>) -> Result<DriveField<T>> {
        if b.prime() != self.p || b.level() > self.level {
            return Err(Error::LevelMismatch("drive does not fit the toy tree".into()));
        }
        Ok(DriveField { b: b.lift(self.level)? })
    }

    /// The same model as a discrete network: `L = l`, `Δ = 1`,
    /// `W(I, K) = a p^{l+1} δ_{IK}`, `W_in` the convolution operator, `φ`
    /// the saturating sigmoid. Its state is the toy state lifted one level.
    pub fn to_network(&self) -> Result<NetworkParams<T>> {
        let levels = LevelPair::new(self.p, self.level, 1)?;
        let n = self.p.size(levels.total())?;
        let diag = self.a * T::of_usize(n);
        let w = TreeKernel::from_entries(self.p, levels.total(), (0..n).map(|i| (i, i, diag)).collect())?;
        let phi = Activation::pwl_sigmoid();
        NetworkParams::builder(self.p, self.level, 1)
            .phi(phi.clone())
            .varphi(phi)
            .weights(w)
            .input_weights(TreeKernel::from_convolution(&self.w_in))
            .bias(self.xi.clone())
            .build()
    }
}

/// `b(z) = (W_in * x)(z) + ξ(z)`.
#[derive(Clone, Debug)]
pub struct DriveField<T> {
    b: TreeFunction<T>,
}

impl<T: Real> DriveField<T> {
    pub fn values(&self) -> &TreeFunction<T> {
        &self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Plus,
    Minus,
    Mid,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Plus => "PLUS",
            Label::Minus => "MINUS",
            Label::Mid => "MID",
        }
    }

    fn symbol(self) -> char {
        match self {
            Label::Plus => '+',
            Label::Minus => '-',
            Label::Mid => '0',
        }
    }

    /// Branch value of the state at a ball carrying this label.
    pub fn state_value<T: Real>(self, a: T, b: T) -> T {
        match self {
            Label::Plus => a + b,
            Label::Minus => b - a,
            Label::Mid => b / (T::one() - a),
        }
    }
}

/// Labels allowed at a ball with drive `b` when `a > 1`; strict inequalities
/// throughout.
pub fn admissible_labels<T: Real>(a: T, b: T) -> Vec<Label> {
    let lo = T::one() - a;
    let hi = a - T::one();
    let mut out = Vec::with_capacity(3);
    if b > lo {
        out.push(Label::Plus);
    }
    if b < hi {
        out.push(Label::Minus);
    }
    if lo < b && b < hi {
        out.push(Label::Mid);
    }
    out
}

/// The unique state for `a ≤ 1`.
pub fn closed_form_state<T: Real>(params: &ToyParams<T>, drive: &DriveField<T>) -> Result<TreeFunction<T>> {
    let a = params.a;
    let one = T::one();
    if a > one {
        return Err(Error::Domain(format!("a = {a} > 1 has many states; use enumerate_states")));
    }
    let h = if a == one {
        drive.b.map(|b| {
            if b > T::zero() {
                one + b
            } else if b < T::zero() {
                b - one
            } else {
                T::zero()
            }
        })
    } else {
        drive.b.map(|b| {
            if b > one - a {
                a + b
            } else if b < a - one {
                b - a
            } else {
                b / (one - a)
            }
        })
    };
    Ok(h)
}

/// `max_I |h(I) - a φ(h(I)) - b(I)|`.
pub fn fixed_point_residual<T: Real>(a: T, h: &TreeFunction<T>, b: &TreeFunction<T>) -> Result<T> {
    let phi = Activation::<T>::pwl_sigmoid();
    let th = h.map(|v| a * phi.eval(v));
    h.sub(&th)?.max_abs_diff(b)
}

/// One state for `a > 1`: a label per ball and the induced `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateLabeling<T> {
    labels: Vec<Label>,
    state: TreeFunction<T>,
    union: Vec<u64>,
}

impl<T: Real> StateLabeling<T> {
    fn build(a: T, b: &TreeFunction<T>, labels: Vec<Label>) -> Self {
        let values = labels.iter().zip(b.coeffs()).map(|(l, &bv)| l.state_value(a, bv)).collect();
        let mut union = vec![0u64; labels.len().div_ceil(64)];
        for (i, l) in labels.iter().enumerate() {
            if *l != Label::Mid {
                union[i / 64] |= 1 << (i % 64);
            }
        }
        let state = TreeFunction::new(b.prime(), b.level(), values).expect("finite branch values");
        Self { labels, state, union }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn state(&self) -> &TreeFunction<T> {
        &self.state
    }

    /// Empty bistability set: no ball carries `MID`.
    pub fn is_bistable(&self) -> bool {
        !self.labels.contains(&Label::Mid)
    }

    /// Balls in `I₊ ∪ I₋`.
    pub fn union_size(&self) -> usize {
        self.union.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Compact form such as `+-0`.
    pub fn code(&self) -> String {
        self.labels.iter().map(|l| l.symbol()).collect()
    }
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Position of `s1` relative to `s2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    /// `s1 ≼ s2`, strictly.
    Below,
    /// `s2 ≼ s1`, strictly.
    Above,
    Incomparable,
}

/// `s' ≼ s` iff `I₊ ∪ I₋ ⊆ I₊' ∪ I₋'`. Distinct labelings with the same
/// union (in particular distinct bistable states) are incomparable.
pub fn order_relation<T: Real>(s1: &StateLabeling<T>, s2: &StateLabeling<T>) -> Result<Relation> {
    if s1.labels.len() != s2.labels.len() {
        return Err(Error::Shape("states live on different trees".into()));
    }
    Ok(relation_unchecked(s1, s2))
}

fn relation_unchecked<T>(s1: &StateLabeling<T>, s2: &StateLabeling<T>) -> Relation {
    if s1.labels == s2.labels {
        return Relation::Equal;
    }
    if s1.union == s2.union {
        return Relation::Incomparable;
    }
    match (subset(&s2.union, &s1.union), subset(&s1.union, &s2.union)) {
        (true, _) => Relation::Below,
        (_, true) => Relation::Above,
        _ => Relation::Incomparable,
    }
}

fn leq<T>(s1: &StateLabeling<T>, s2: &StateLabeling<T>) -> bool {
    matches!(relation_unchecked(s1, s2), Relation::Equal | Relation::Below)
}

/// States of the toy model for `a > 1`.
#[derive(Clone, Debug)]
pub struct StatePoset<T> {
    count: BigUint,
    states: Vec<StateLabeling<T>>,
    sampled: bool,
    admissible: Vec<Vec<Label>>,
}

/// Outcome of the exhaustive partial-order check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetAxioms {
    pub reflexive: bool,
    pub antisymmetric: bool,
    pub transitive: bool,
    /// Whether transitivity was checked over all state triples or over the
    /// distinct union sets (which decide every strict relation).
    pub by_triples: bool,
}

impl PosetAxioms {
    pub fn holds(&self) -> bool {
        self.reflexive && self.antisymmetric && self.transitive
    }
}

/// Brute-force meet and join search over an enumerated poset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeReport {
    pub pairs: usize,
    pub pairs_with_meet: usize,
    pub pairs_with_join: usize,
}

impl LatticeReport {
    pub fn is_lattice(&self) -> bool {
        self.pairs_with_meet == self.pairs && self.pairs_with_join == self.pairs
    }
}

/// All states for `a > 1` when there are at most `cap`, otherwise the exact
/// count and `cap` distinct labelings drawn uniformly with `seed`.
pub fn enumerate_states<T: Real>(params: &ToyParams<T>, drive: &DriveField<T>, cap: u64, seed: u64) -> Result<StatePoset<T>> {
    let a = params.a;
    if a <= T::one() {
        return Err(Error::Domain(format!("a = {a} ≤ 1 has a unique state; use closed_form_state")));
    }
    let b = &drive.b;
    let admissible: Vec<Vec<Label>> = b.coeffs().iter().map(|&bv| admissible_labels(a, bv)).collect();
    if let Some(i) = admissible.iter().position(Vec::is_empty) {
        return Err(Error::Infeasible(format!("no admissible label at ball {i} (b = {})", b.coeffs()[i])));
    }
    let count = admissible.iter().fold(BigUint::from(1u32), |acc, s| acc * BigUint::from(s.len()));
    let sampled = count > BigUint::from(cap);
    let states = if !sampled {
        let total = u64::try_from(&count).expect("count bounded by cap");
        (0..total)
            .into_par_iter()
            .map(|t| StateLabeling::build(a, b, decode(t, &admissible)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        while (out.len() as u64) < cap {
            let labels: Vec<Label> = admissible.iter().map(|s| s[rng.random_range(0..s.len())]).collect();
            if seen.insert(labels.clone()) {
                out.push(StateLabeling::build(a, b, labels));
            }
        }
        out
    };
    Ok(StatePoset { count, states, sampled, admissible })
}

/// Mixed-radix decoding, first ball fastest.
fn decode(mut t: u64, admissible: &[Vec<Label>]) -> Vec<Label> {
    admissible
        .iter()
        .map(|s| {
            let n = s.len() as u64;
            let l = s[(t % n) as usize];
            t /= n;
            l
        })
        .collect()
}

impl<T: Real> StatePoset<T> {
    /// Exact number of states, `Π_I |admissible(I)|`.
    pub fn count(&self) -> &BigUint {
        &self.count
    }

    pub fn states(&self) -> &[StateLabeling<T>] {
        &self.states
    }

    pub fn is_sampled(&self) -> bool {
        self.sampled
    }

    pub fn admissible(&self) -> &[Vec<Label>] {
        &self.admissible
    }

    /// Largest fixed-point residual over the returned states.
    pub fn max_residual(&self, a: T, drive: &DriveField<T>) -> Result<T> {
        self.states
            .par_iter()
            .map(|s| fixed_point_residual(a, &s.state, &drive.b))
            .try_reduce(T::zero, |x, y| Ok(x.max(y)))
    }

    fn require_full(&self, what: &str) -> Result<()> {
        if self.sampled {
            return Err(Error::Unsupported(format!("{what} needs the full state set, not a sample")));
        }
        Ok(())
    }

    fn union_classes(&self) -> Vec<Vec<u64>> {
        let set: BTreeSet<&Vec<u64>> = self.states.iter().map(|s| &s.union).collect();
        set.into_iter().cloned().collect()
    }

    /// States with nothing strictly below them.
    pub fn minimal_elements(&self) -> Result<Vec<&StateLabeling<T>>> {
        self.require_full("minimal elements")?;
        let classes = self.union_classes();
        Ok(self
            .states
            .iter()
            .filter(|s| !classes.iter().any(|c| *c != s.union && subset(&s.union, c)))
            .collect())
    }

    pub fn bistable(&self) -> Vec<&StateLabeling<T>> {
        self.states.iter().filter(|s| s.is_bistable()).collect()
    }

    /// Reflexivity and antisymmetry over all pairs; transitivity over all
    /// triples for small posets, otherwise over the union sets.
    pub fn check_partial_order(&self) -> PosetAxioms {
        let s = &self.states;
        let reflexive = s.par_iter().all(|x| leq(x, x));
        let antisymmetric = (0..s.len())
            .into_par_iter()
            .all(|i| (0..s.len()).all(|j| i == j || !(leq(&s[i], &s[j]) && leq(&s[j], &s[i]))));
        let by_triples = s.len() <= TRIPLE_CHECK_MAX;
        let transitive = if by_triples {
            (0..s.len()).into_par_iter().all(|i| {
                (0..s.len())
                    .filter(|&j| leq(&s[i], &s[j]))
                    .all(|j| (0..s.len()).filter(|&k| leq(&s[j], &s[k])).all(|k| leq(&s[i], &s[k])))
            })
        } else {
            let c = self.union_classes();
            let strict = |x: &Vec<u64>, y: &Vec<u64>| x != y && subset(y, x);
            (0..c.len()).into_par_iter().all(|i| {
                (0..c.len())
                    .filter(|&j| strict(&c[i], &c[j]))
                    .all(|j| (0..c.len()).filter(|&k| strict(&c[j], &c[k])).all(|k| strict(&c[i], &c[k])))
            })
        };
        PosetAxioms { reflexive, antisymmetric, transitive, by_triples }
    }

    /// Covering pairs `(lower, upper)` as state positions.
    pub fn covering_pairs(&self) -> Vec<(usize, usize)> {
        let classes = self.union_classes();
        // A strictly larger union sits lower; `m_low` is covered by `m_up`
        // when no union lies strictly between them.
        let covers = |low: &Vec<u64>, up: &Vec<u64>| {
            low != up
                && subset(up, low)
                && !classes.iter().any(|m| m != low && m != up && subset(up, m) && subset(m, low))
        };
        let s = &self.states;
        (0..s.len())
            .into_par_iter()
            .flat_map_iter(|i| (0..s.len()).filter(move |&j| covers(&s[i].union, &s[j].union)).map(move |j| (i, j)))
            .collect()
    }

    /// Hasse diagram as a DOT digraph, edges pointing up.
    pub fn hasse_dot(&self) -> String {
        let mut out = String::from("digraph states {\n  rankdir=BT;\n");
        for (i, s) in self.states.iter().enumerate() {
            let shape = if s.is_bistable() { "box" } else { "ellipse" };
            let _ = writeln!(out, "  s{i} [label=\"{}\", shape={shape}];", s.code());
        }
        for (i, j) in self.covering_pairs() {
            let _ = writeln!(out, "  s{i} -> s{j};");
        }
        out.push_str("}\n");
        out
    }

    /// Searches every pair for a greatest lower and least upper bound;
    /// `None` for sampled or large posets.
    pub fn lattice_report(&self) -> Option<LatticeReport> {
        let s = &self.states;
        if self.sampled || s.len() > LATTICE_SEARCH_MAX {
            return None;
        }
        let n = s.len();
        let bound = |i: usize, j: usize, below: bool| {
            let ok = |u: usize, x: usize| if below { leq(&s[u], &s[x]) } else { leq(&s[x], &s[u]) };
            let bounds: Vec<usize> = (0..n).filter(|&u| ok(u, i) && ok(u, j)).collect();
            bounds.iter().any(|&m| bounds.iter().all(|&u| ok(u, m)))
        };
        let (mut meet, mut join, mut pairs) = (0, 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                pairs += 1;
                meet += bound(i, j, true) as usize;
                join += bound(i, j, false) as usize;
            }
        }
        Some(LatticeReport { pairs, pairs_with_meet: meet, pairs_with_join: join })
    }

    /// `index,label,value` rows, states separated by a `state` column.
    pub fn states_csv(&self) -> String {
        let mut out = String::from("state,index,label,value\n");
        for (k, s) in self.states.iter().enumerate() {
            for (i, (l, v)) in s.labels.iter().zip(s.state.coeffs()).enumerate() {
                let _ = writeln!(out, "{k},{i},{},{}", l.as_str(), crate::formats::fmt_num(v.as_f64()));
            }
        }
        out
    }
}

/// Label of a closed-form state value for `a ≤ 1`.
pub fn closed_form_label<T: Real>(a: T, b: T) -> Label {
    if b > T::one() - a {
        Label::Plus
    } else if b < a - T::one() {
        Label::Minus
    } else {
        Label::Mid
    }
}

/// `index,label,value` for a single closed-form state.
pub fn closed_form_csv<T: Real>(params: &ToyParams<T>, drive: &DriveField<T>, h: &TreeFunction<T>) -> String {
    let mut out = String::from("index,label,value\n");
    let one = T::one();
    for (i, (&b, &v)) in drive.b.coeffs().iter().zip(h.coeffs()).enumerate() {
        let label = if params.a == one {
            match b.partial_cmp(&T::zero()) {
                Some(std::cmp::Ordering::Greater) => Label::Plus,
                Some(std::cmp::Ordering::Less) => Label::Minus,
                _ => Label::Mid,
            }
        } else {
            closed_form_label(params.a, b)
        };
        let _ = writeln!(out, "{i},{},{}", label.as_str(), crate::formats::fmt_num(v.as_f64()));
    }
    out
}

/// Pixels in row-major order, `[0, 255] → [-1, 1]`, zero beyond the image.
pub fn image_to_function<T: Real>(image: &GrayImage, p: Prime, level: u32) -> Result<TreeFunction<T>> {
    let n = p.size(level)?;
    let px = image.pixels();
    if px.len() > n {
        return Err(Error::Capacity { p: p.get(), level, cap: n as u64 });
    }
    let half = T::of(127.5);
    TreeFunction::from_fn(p, level, |i| px.get(i).map_or(T::zero(), |&v| T::of(f64::from(v)) / half - T::one()))
}

/// Inverse of [`image_to_function`], clamped to `[0, 255]`.
pub fn function_to_image<T: Real>(f: &TreeFunction<T>, width: usize, height: usize) -> Result<GrayImage> {
    if width * height > f.len() {
        return Err(Error::Shape(format!("{width} × {height} image does not fit {} coefficients", f.len())));
    }
    let px = f.coeffs()[..width * height]
        .iter()
        .map(|&y| ((y.as_f64() + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(width, height, px)
}

/// `y = φ(h)` for the unique state driven by the image.
pub fn edge_detect<T: Real>(image: &GrayImage, params: &ToyParams<T>) -> Result<GrayImage> {
    let x = image_to_function::<T>(image, params.p, params.level)?;
    let drive = params.drive(&x)?;
    let h = closed_form_state(params, &drive)?;
    let y = h.apply_activation(&Activation::pwl_sigmoid());
    function_to_image(&y, image.width(), image.height())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(p: u64) -> Prime {
        Prime::new(p).unwrap()
    }

    fn toy(a: f64, p: u64, l: u32) -> ToyParams<f64> {
        ToyParams::zero(a, pr(p), l).unwrap()
    }

    fn constant_drive(t: &ToyParams<f64>, c: f64) -> DriveField<f64> {
        t.drive_from(TreeFunction::constant(t.prime(), t.level(), c).unwrap()).unwrap()
    }

    #[test]
    fn drive_examples() {
        let p = pr(3);
        let xi = TreeFunction::from_fn(p, 2, |i| i as f64 * 0.1).unwrap();
        let x = TreeFunction::from_fn(p, 2, |i| (i as f64).sin()).unwrap();
        let t = ToyParams::new(0.5, 2, TreeFunction::zeros(p, 2).unwrap(), xi.clone()).unwrap();
        assert_eq!(t.drive(&x).unwrap().values(), &xi);
        assert_eq!(t.drive(&TreeFunction::zeros(p, 2).unwrap()).unwrap().values(), &xi);
        let t = ToyParams::new(0.5, 2, TreeFunction::constant(p, 2, 1.0).unwrap(), xi.clone()).unwrap();
        let b = t.drive(&x).unwrap();
        let mean = x.integrate();
        for (i, &v) in b.values().coeffs().iter().enumerate() {
            assert!((v - mean - xi.coeffs()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_examples() {
        let t = toy(0.5, 2, 1);
        assert_eq!(closed_form_state(&t, &constant_drive(&t, 2.0)).unwrap().coeffs(), &[2.5, 2.5]);
        let h = closed_form_state(&t, &constant_drive(&t, 0.2)).unwrap();
        assert!(h.coeffs().iter().all(|&v| (v - 0.4).abs() < 1e-15));
        let t = toy(1.0, 2, 1);
        assert_eq!(closed_form_state(&t, &constant_drive(&t, 0.0)).unwrap().coeffs(), &[0.0, 0.0]);
        let t = toy(2.0, 2, 1);
        assert!(matches!(closed_form_state(&t, &constant_drive(&t, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_residuals() {
        let p = pr(3);
        let b = TreeFunction::from_fn(p, 2, |i| (i as f64 - 4.0) * 0.4).unwrap();
        for a in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let t = ToyParams::zero(a, p, 2).unwrap();
            let d = t.drive_from(b.clone()).unwrap();
            let h = closed_form_state(&t, &d).unwrap();
            assert!(fixed_point_residual(a, &h, &b).unwrap() <= 1e-12, "a={a}");
        }
    }

    #[test]
    fn enumerate_b_zero() {
        let t = toy(2.0, 2, 1);
        let d = constant_drive(&t, 0.0);
        let poset = enumerate_states(&t, &d, DEFAULT_STATE_CAP, 0).unwrap();
        assert_eq!(poset.count(), &BigUint::from(9u32));
        assert_eq!(poset.states().len(), 9);
        assert_eq!(poset.bistable().len(), 4);
        assert!(poset.max_residual(2.0, &d).unwrap() <= 1e-12);
        for s in poset.states() {
            for &v in s.state().coeffs() {
                assert!([2.0, -2.0, 0.0].contains(&v));
            }
        }
        let minimal = poset.minimal_elements().unwrap();
        assert_eq!(minimal.len(), 4);
        assert!(minimal.iter().all(|s| s.is_bistable()));
        let top = poset.states().iter().find(|s| s.union_size() == 0).unwrap();
        for s in poset.states() {
            assert!(leq(s, top));
        }
        let axioms = poset.check_partial_order();
        assert!(axioms.holds() && axioms.by_triples);
    }

    #[test]
    fn enumerate_single_state_and_cap_zero() {
        let t = toy(2.0, 2, 1);
        let d = constant_drive(&t, 5.0);
        let poset = enumerate_states(&t, &d, 10, 0).unwrap();
        assert_eq!(poset.states().len(), 1);
        let s = &poset.states()[0];
        assert_eq!(s.state().coeffs(), &[7.0, 7.0]);
        assert!(s.is_bistable());
        assert_eq!(poset.minimal_elements().unwrap().len(), 1);

        let d = constant_drive(&t, 0.0);
        let poset = enumerate_states(&t, &d, 0, 0).unwrap();
        assert_eq!(poset.count(), &BigUint::from(9u32));
        assert!(poset.states().is_empty());
        assert!(poset.is_sampled());
        assert!(matches!(poset.minimal_elements(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn boundary_drives() {
        assert_eq!(admissible_labels(2.0, 1.0), vec![Label::Plus]);
        assert_eq!(admissible_labels(2.0, -1.0), vec![Label::Minus]);
        assert_eq!(admissible_labels(2.0, 0.5), vec![Label::Plus, Label::Minus, Label::Mid]);
    }

    #[test]
    fn relation_examples() {
        let t = toy(2.0, 2, 1);
        let d = constant_drive(&t, 0.0);
        let poset = enumerate_states(&t, &d, DEFAULT_STATE_CAP, 0).unwrap();
        let by_code = |c: &str| poset.states().iter().find(|s| s.code() == c).unwrap();
        assert_eq!(order_relation(by_code("+-"), by_code("+-")).unwrap(), Relation::Equal);
        assert_eq!(order_relation(by_code("+-"), by_code("++")).unwrap(), Relation::Incomparable);
        assert_eq!(order_relation(by_code("+0"), by_code("00")).unwrap(), Relation::Below);
        assert_eq!(order_relation(by_code("00"), by_code("-+")).unwrap(), Relation::Above);
        assert_eq!(order_relation(by_code("+0"), by_code("0+")).unwrap(), Relation::Incomparable);
        let report = poset.lattice_report().unwrap();
        assert_eq!(report.pairs, 36);
        assert!(!report.is_lattice());
        let dot = poset.hasse_dot();
        assert!(dot.starts_with("digraph"));
        // Each one-MID state is covered by the top and covers all four
        // bistable states, since only the union sets are compared.
        assert_eq!(poset.covering_pairs().len(), 4 + 4 * 4);
    }

    #[test]
    fn sampled_states_are_distinct_and_deterministic() {
        let t = toy(3.0, 3, 2);
        let d = constant_drive(&t, 0.0);
        let a = enumerate_states(&t, &d, 50, 7).unwrap();
        let b = enumerate_states(&t, &d, 50, 7).unwrap();
        assert_eq!(a.count(), &BigUint::from(3u32).pow(9));
        assert_eq!(a.states().len(), 50);
        assert_eq!(a.states(), b.states());
        let codes: HashSet<String> = a.states().iter().map(|s| s.code()).collect();
        assert_eq!(codes.len(), 50);
    }

    #[test]
    fn edge_detect_constant_image_is_gray() {
        let p = pr(2);
        let mut k = vec![0.0; 16];
        k[0] = 1.0;
        k[1] = -1.0;
        let t = ToyParams::new(0.5, 4, TreeFunction::new(p, 4, k).unwrap(), TreeFunction::zeros(p, 4).unwrap()).unwrap();
        let img = GrayImage::new(4, 4, vec![200; 16]).unwrap();
        let out = edge_detect(&img, &t).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 128));
    }

    #[test]
    fn edge_detect_without_coupling_applies_phi() {
        let p = pr(2);
        let mut k = vec![0.0; 8];
        k[0] = 8.0;
        let t = ToyParams::new(0.0, 3, TreeFunction::new(p, 3, k).unwrap(), TreeFunction::zeros(p, 3).unwrap()).unwrap();
        let img = GrayImage::new(8, 1, vec![0, 30, 60, 100, 128, 180, 220, 255]).unwrap();
        let out = edge_detect(&img, &t).unwrap();
        // An identity convolution leaves b = x, so y = φ(x) = x on [-1, 1].
        assert_eq!(out, img);
        let big = GrayImage::new(3, 3, vec![0; 9]).unwrap();
        assert!(matches!(edge_detect(&big, &t), Err(Error::Capacity { .. })));
    }

    #[test]
    fn matches_solver_on_diagonal_kernel() {
        let p = pr(2);
        let xi = TreeFunction::from_fn(p, 2, |i| [0.3, -0.8, 1.4, 0.05][i]).unwrap();
        let k = TreeFunction::from_fn(p, 2, |i| [0.6, -0.2, 0.1, 0.0][i]).unwrap();
        let x = TreeFunction::from_fn(p, 2, |i| [1.0, -1.0, 0.5, 2.0][i]).unwrap();
        for a in [0.25, 0.5, 0.9] {
            let t = ToyParams::new(a, 2, k.clone(), xi.clone()).unwrap();
            let h = closed_form_state(&t, &t.drive(&x).unwrap()).unwrap();
            let net = t.to_network().unwrap();
            let rep = crate::solver::solve(&net, &x, 1e-12, 10_000).unwrap();
            assert!(rep.converged);
            assert!(rep.state.max_abs_diff(&h).unwrap() <= 1e-8, "a={a}");
        }
    }
}
