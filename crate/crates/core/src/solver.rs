//! Hidden states of p-adic networks.
//!
//! The continuous network's state is the fixed point of
//!
//! ```text
//! T h = ∫ W(x, y) φ(h(y)) dy + ∫ W_in(x, y) x(y) dy + ξ(x)
//! ```
//!
//! At a finite level all integrals are exact sums, so the discrete network
//! is the same map on `D^{L+Δ}(Z_p)`. `T` is a contraction with constant
//! `q = L_φ ‖W‖₂`, and Picard iteration from `h₀ = 0` converges whenever
//! `q < 1`. For `q ≥ 1` the iteration still runs and reports what it found.

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::formats::{FunctionJson, KernelJson};
use crate::padic::{LevelPair, Prime};
use crate::scalar::Real;
use crate::tree::{TreeFunction, TreeKernel};

/// Parameters `θ' = {φ, ϕ, W_in, W_out, W, ξ, ξ_out}` of a discrete network.
#[derive(Clone, Debug)]
pub struct NetworkParams<T> {
    p: Prime,
    levels: LevelPair,
    phi: Activation<T>,
    varphi: Activation<T>,
    w: TreeKernel<T>,
    w_in: TreeKernel<T>,
    w_out: TreeKernel<T>,
    xi: TreeFunction<T>,
    xi_out: TreeFunction<T>,
}

/// Builder for [`NetworkParams`]; unset components are zero, activations
/// default to `tanh`.
#[derive(Clone, Debug)]
pub struct NetworkBuilder<T> {
    p: Prime,
    input_level: u32,
    depth: u32,
    phi: Activation<T>,
    varphi: Activation<T>,
    w: Option<TreeKernel<T>>,
    w_in: Option<TreeKernel<T>>,
    w_out: Option<TreeKernel<T>>,
    xi: Option<TreeFunction<T>>,
    xi_out: Option<TreeFunction<T>>,
}

impl<T: Real> NetworkBuilder<T> {
    pub fn phi(mut self, phi: Activation<T>) -> Self {
        self.phi = phi;
        self
    }

    pub fn varphi(mut self, varphi: Activation<T>) -> Self {
        self.varphi = varphi;
        self
    }

    pub fn weights(mut self, w: TreeKernel<T>) -> Self {
        self.w = Some(w);
        self
    }

    pub fn input_weights(mut self, w_in: TreeKernel<T>) -> Self {
        self.w_in = Some(w_in);
        self
    }

    pub fn output_weights(mut self, w_out: TreeKernel<T>) -> Self {
        self.w_out = Some(w_out);
        self
    }

    pub fn bias(mut self, xi: TreeFunction<T>) -> Self {
        self.xi = Some(xi);
        self
    }

    pub fn output_bias(mut self, xi_out: TreeFunction<T>) -> Self {
        self.xi_out = Some(xi_out);
        self
    }

    pub fn build(self) -> Result<NetworkParams<T>> {
        let p = self.p;
        let levels = LevelPair::new(p, self.input_level, self.depth)?;
        let l = levels.total();
        let same_prime = |q: Prime| {
            if q == p {
                Ok(())
            } else {
                Err(Error::PrimeMismatch { left: p.get(), right: q.get() })
            }
        };
        let kernel_at = |k: Option<TreeKernel<T>>, level: u32, name: &str| -> Result<TreeKernel<T>> {
            match k {
                None => TreeKernel::zeros(p, level),
                Some(k) => {
                    same_prime(k.prime())?;
                    if k.level() > level {
                        return Err(Error::LevelMismatch(format!(
                            "{name} at level {} exceeds {level}",
                            k.level()
                        )));
                    }
                    k.lift(level)
                }
            }
        };
        let function_at = |f: Option<TreeFunction<T>>, name: &str| -> Result<TreeFunction<T>> {
            match f {
                None => TreeFunction::zeros(p, l),
                Some(f) => {
                    same_prime(f.prime())?;
                    if f.level() > l {
                        return Err(Error::LevelMismatch(format!("{name} at level {} exceeds {l}", f.level())));
                    }
                    f.lift(l)
                }
            }
        };
        let w = kernel_at(self.w, l, "W")?;
        let w_out = kernel_at(self.w_out, l, "W_out")?;
        let w_in = match self.w_in {
            None => TreeKernel::zeros(p, levels.input())?,
            Some(k) => {
                same_prime(k.prime())?;
                if k.level() > levels.input() {
                    return Err(Error::LevelMismatch(format!(
                        "W_in at level {} exceeds input level {}",
                        k.level(),
                        levels.input()
                    )));
                }
                k
            }
        };
        Ok(NetworkParams {
            p,
            levels,
            phi: self.phi,
            varphi: self.varphi,
            w,
            w_in,
            w_out,
            xi: function_at(self.xi, "xi")?,
            xi_out: function_at(self.xi_out, "xi_out")?,
        })
    }
}

impl<T: Real> NetworkParams<T> {
    /// Starts a network with input level `L` and depth `Δ`.
    pub fn builder(p: Prime, input_level: u32, depth: u32) -> NetworkBuilder<T> {
        NetworkBuilder {
            p,
            input_level,
            depth,
            phi: Activation::tanh(),
            varphi: Activation::tanh(),
            w: None,
            w_in: None,
            w_out: None,
            xi: None,
            xi_out: None,
        }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn levels(&self) -> LevelPair {
        self.levels
    }

    /// `L + Δ`, the level of the state.
    pub fn level(&self) -> u32 {
        self.levels.total()
    }

    pub fn phi(&self) -> &Activation<T> {
        &self.phi
    }

    pub fn varphi(&self) -> &Activation<T> {
        &self.varphi
    }

    pub fn weights(&self) -> &TreeKernel<T> {
        &self.w
    }

    pub fn input_weights(&self) -> &TreeKernel<T> {
        &self.w_in
    }

    pub fn output_weights(&self) -> &TreeKernel<T> {
        &self.w_out
    }

    pub fn bias(&self) -> &TreeFunction<T> {
        &self.xi
    }

    pub fn output_bias(&self) -> &TreeFunction<T> {
        &self.xi_out
    }

    /// A copy with `W` replaced (same level).
    pub fn with_weights(&self, w: TreeKernel<T>) -> Result<Self> {
        if w.prime() != self.p || w.level() != self.level() {
            return Err(Error::LevelMismatch("replacement W must match prime and level".into()));
        }
        Ok(Self { w, ..self.clone() })
    }

    /// The same network refined to one more level of depth: every kernel and
    /// bias is lifted, `W_in` stays at the input level.
    pub fn refine(&self) -> Result<Self> {
        let levels = LevelPair::new(self.p, self.levels.input(), self.levels.depth() + 1)?;
        let l = levels.total();
        Ok(Self {
            p: self.p,
            levels,
            phi: self.phi.clone(),
            varphi: self.varphi.clone(),
            w: self.w.lift(l)?,
            w_in: self.w_in.clone(),
            w_out: self.w_out.lift(l)?,
            xi: self.xi.lift(l)?,
            xi_out: self.xi_out.lift(l)?,
        })
    }

    fn check_input(&self, x: &TreeFunction<T>) -> Result<()> {
        if x.prime() != self.p {
            return Err(Error::PrimeMismatch { left: self.p.get(), right: x.prime().get() });
        }
        if x.level() > self.levels.input() {
            return Err(Error::LevelMismatch(format!(
                "input at level {} exceeds input level {}",
                x.level(),
                self.levels.input()
            )));
        }
        Ok(())
    }

    /// `∫ W_in(x, y) x(y) dy + ξ(x)` at the state level.
    pub fn drive(&self, x: &TreeFunction<T>) -> Result<TreeFunction<T>> {
        self.check_input(x)?;
        let m = self.w_in.level().max(x.level());
        let injected = self.w_in.lift(m)?.apply(x)?.lift(self.level())?;
        injected.add(&self.xi)
    }

    fn step(&self, drive: &TreeFunction<T>, h: &TreeFunction<T>) -> Result<TreeFunction<T>> {
        self.w.apply(&h.apply_activation(&self.phi))?.add(drive)
    }

    /// One application of `T` to `h`.
    pub fn forward_map(&self, x: &TreeFunction<T>, h: &TreeFunction<T>) -> Result<TreeFunction<T>> {
        if h.prime() != self.p {
            return Err(Error::PrimeMismatch { left: self.p.get(), right: h.prime().get() });
        }
        if h.level() > self.level() {
            return Err(Error::LevelMismatch(format!("state at level {} exceeds {}", h.level(), self.level())));
        }
        self.step(&self.drive(x)?, h)
    }

    /// `y = ∫ W_out(x, y) ϕ(h(y)) dy + ξ_out(x)`.
    pub fn output(&self, h: &TreeFunction<T>) -> Result<TreeFunction<T>> {
        self.w_out.apply(&h.apply_activation(&self.varphi))?.add(&self.xi_out)
    }

    /// `q = L_φ ‖W‖₂`.
    pub fn contraction_constant(&self) -> T {
        self.phi.lipschitz() * self.w.l2_norm()
    }

    /// `‖φ‖_∞ ‖W‖₂ + ‖W_in‖₂ ‖x‖₂ + ‖ξ‖₂`; `None` for unbounded `φ`.
    pub fn state_norm_bound(&self, x: &TreeFunction<T>) -> Option<T> {
        if !self.phi.is_bounded() {
            return None;
        }
        Some(self.phi.sup_norm() * self.w.l2_norm() + self.w_in.l2_norm() * x.l2_norm() + self.xi.l2_norm())
    }
}

/// Iteration controls for [`solve_with`].
#[derive(Clone, Debug)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Starting iterate; zero when absent.
    pub initial: Option<TreeFunction<T>>,
}

impl<T: Real> SolveOptions<T> {
    pub fn new(tol: T, max_iter: usize) -> Self {
        Self { tol, max_iter, initial: None }
    }
}

/// Outcome of a Picard solve.
#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    pub state: TreeFunction<T>,
    pub output: TreeFunction<T>,
    pub iterations: usize,
    /// `‖T h - h‖₂` at the returned state.
    pub residual: T,
    pub contraction_q: T,
    /// `q < 1`.
    pub stable: bool,
    /// The stopping rule fired before `max_iter`.
    pub converged: bool,
    pub norm_bound: Option<T>,
    pub norm_bound_ok: bool,
    /// `‖h_{n+1} - h_n‖₂` for every iteration.
    pub step_norms: Vec<T>,
}

/// Scalar diagnostics of a [`SolveReport`], as written to JSON.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveSummary {
    pub iterations: usize,
    pub residual: f64,
    pub contraction_q: f64,
    pub stable: bool,
    pub converged: bool,
    pub norm_bound: Option<f64>,
    pub norm_bound_ok: bool,
    pub state_norm: f64,
    pub output_norm: f64,
    pub first_step: f64,
    pub last_step: f64,
}

impl<T: Real> SolveReport<T> {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            iterations: self.iterations,
            residual: self.residual.as_f64(),
            contraction_q: self.contraction_q.as_f64(),
            stable: self.stable,
            converged: self.converged,
            norm_bound: self.norm_bound.map(|b| b.as_f64()),
            norm_bound_ok: self.norm_bound_ok,
            state_norm: self.state.l2_norm().as_f64(),
            output_norm: self.output.l2_norm().as_f64(),
            first_step: self.step_norms.first().map_or(0.0, |s| s.as_f64()),
            last_step: self.step_norms.last().map_or(0.0, |s| s.as_f64()),
        }
    }
}

pub fn solve<T: Real>(params: &NetworkParams<T>, x: &TreeFunction<T>, tol: T, max_iter: usize) -> Result<SolveReport<T>> {
    solve_with(params, x, &SolveOptions::new(tol, max_iter))
}

/// Picard iteration `h_{n+1} = T h_n`.
///
/// For `q < 1` the loop stops once `‖h_{n+1} - h_n‖ < tol (1 - q) / q`,
/// which bounds the distance of the returned iterate to the fixed point by
/// `tol`. For `q ≥ 1` it stops on `‖h_{n+1} - h_n‖ < tol` or at
/// `max_iter`, returning the iterate with the smallest residual seen.
pub fn solve_with<T: Real>(params: &NetworkParams<T>, x: &TreeFunction<T>, opts: &SolveOptions<T>) -> Result<SolveReport<T>> {
    if !(opts.tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let l = params.level();
    let drive = params.drive(x)?;
    let q = params.contraction_constant();
    let stable = q < T::one();
    let threshold = if stable { opts.tol * (T::one() - q) / q.max(T::epsilon()) } else { opts.tol };

    let mut h = match &opts.initial {
        Some(h0) => {
            if h0.prime() != params.prime() || h0.level() > l {
                return Err(Error::LevelMismatch("initial iterate does not fit the network".into()));
            }
            h0.lift(l)?
        }
        None => TreeFunction::zeros(params.prime(), l)?,
    };
    let mut step_norms = Vec::new();
    let mut converged = false;
    let mut best: Option<(T, TreeFunction<T>)> = None;
    let mut next = params.step(&drive, &h)?;
    for _ in 0..opts.max_iter {
        let step = next.sub(&h)?.l2_norm();
        step_norms.push(step);
        if !step.is_finite() {
            break;
        }
        h = next;
        next = params.step(&drive, &h)?;
        if step < threshold {
            converged = true;
            break;
        }
        if !stable {
            let r = next.sub(&h)?.l2_norm();
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, h.clone()));
            }
        }
    }
    let (state, residual) = match best {
        Some((r, b)) if !converged && r < next.sub(&h)?.l2_norm() => (b, r),
        _ => {
            let r = next.sub(&h)?.l2_norm();
            (h, r)
        }
    };
    let output = params.output(&state)?;
    let norm_bound = params.state_norm_bound(x);
    let norm_bound_ok = match norm_bound {
        Some(b) => state.l2_norm() <= b + T::of(1e-10),
        None => true,
    };
    Ok(SolveReport {
        state,
        output,
        iterations: step_norms.len(),
        residual,
        contraction_q: q,
        stable,
        converged,
        norm_bound,
        norm_bound_ok,
        step_norms,
    })
}

/// Whether the constant `α` is a state: `α = φ(α) ∫W(x,y)dy + ∫W_in x + ξ`
/// at every ball.
#[derive(Clone, Debug)]
pub struct ConstantStateQuery<T> {
    pub rowsum: TreeFunction<T>,
    pub drive: TreeFunction<T>,
    pub tolerance: T,
    phi: Activation<T>,
}

impl<T: Real> ConstantStateQuery<T> {
    pub fn new(params: &NetworkParams<T>, x: &TreeFunction<T>, tolerance: T) -> Result<Self> {
        Ok(Self {
            rowsum: params.weights().row_integrals(),
            drive: params.drive(x)?,
            tolerance,
            phi: params.phi().clone(),
        })
    }

    /// `max_I |α - (φ(α) rowsum(I) + drive(I))|`.
    pub fn defect(&self, alpha: T) -> T {
        let fa = self.phi.eval(alpha);
        self.rowsum
            .coeffs()
            .iter()
            .zip(self.drive.coeffs())
            .fold(T::zero(), |m, (&r, &d)| m.max((alpha - (fa * r + d)).abs()))
    }

    pub fn holds(&self, alpha: T) -> bool {
        self.defect(alpha) <= self.tolerance
    }
}

pub fn check_constant_state<T: Real>(params: &NetworkParams<T>, x: &TreeFunction<T>, alpha: T, tol: T) -> Result<bool> {
    Ok(ConstantStateQuery::new(params, x, tol)?.holds(alpha))
}

/// Solves the scalar equation `α = a φ(α) + c`.
///
/// Picard iteration when `|a| L_φ < 1`, bisection on `α - a φ(α) - c`
/// over `[-1000, 1000]` otherwise (or if Picard stalls). The residual is
/// below `1e-13`, relaxed proportionally for large `|c|` or low precision.
pub fn solve_constant_scalar<T: Real>(a: T, c: T, phi: &Activation<T>) -> Result<T> {
    let g = |s: T| s - a * phi.eval(s) - c;
    let scale = T::one() + c.abs() + a.abs();
    let tol = T::of(1e-13).max(T::of(16.0) * T::epsilon() * scale);
    if a.abs() * phi.lipschitz() < T::one() {
        let mut s = c;
        for _ in 0..100_000 {
            let next = a * phi.eval(s) + c;
            let done = next == s;
            s = next;
            if done || g(s).abs() < tol / T::of(4.0) {
                break;
            }
        }
        if g(s).abs() < tol {
            return Ok(s);
        }
    }
    let bound = T::of(1000.0);
    let cells = 4000;
    let width = (bound + bound) / T::of_usize(cells);
    let mut lo = -bound;
    let mut glo = g(lo);
    let mut bracket = None;
    for k in 1..=cells {
        let hi = -bound + width * T::of_usize(k);
        let ghi = g(hi);
        if glo == T::zero() {
            return Ok(lo);
        }
        if glo.signum() != ghi.signum() {
            bracket = Some((lo, hi, glo));
            break;
        }
        lo = hi;
        glo = ghi;
    }
    let (mut lo, mut hi, glo) = bracket.ok_or_else(|| {
        Error::Numeric(format!("no sign change of α - aφ(α) - c on [-1000, 1000] (a = {a}, c = {c})"))
    })?;
    loop {
        let mid = (lo + hi) / (T::one() + T::one());
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == T::zero() {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    if g(s).abs() < tol {
        Ok(s)
    } else {
        Err(Error::Numeric(format!("scalar root residual {} above {tol}", g(s).abs())))
    }
}

/// Smallest `n` with `q^n · first_step / (1 - q) ≤ tol`.
pub fn theoretical_iteration_budget(q: f64, first_step: f64, tol: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("iteration budget needs 0 <= q < 1, got {q}")));
    }
    if !(tol > 0.0) || first_step < 0.0 {
        return Err(Error::Domain("iteration budget needs tol > 0 and first_step >= 0".into()));
    }
    let fits = |n: u64| q.powi(n.min(i32::MAX as u64) as i32) * first_step / (1.0 - q) <= tol;
    if fits(0) {
        return Ok(0);
    }
    if q == 0.0 {
        return Ok(1);
    }
    let guess = ((tol * (1.0 - q) / first_step).ln() / q.ln()).ceil().max(1.0) as u64;
    let mut n = guess.saturating_sub(2).max(1);
    while !fits(n) {
        n += 1;
    }
    Ok(n)
}

/// Grid samples `W(x_j, y_k)` of a kernel on `[0, 1]²`, `x_j = j / N`.
#[derive(Clone, Debug)]
pub struct IntervalKernel<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Real> IntervalKernel<T> {
    pub fn sample(n: usize, w: impl Fn(T, T) -> T) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("interval grid needs N >= 1".into()));
        }
        let nodes = Self::nodes(n);
        let mut values = Vec::with_capacity((n + 1) * (n + 1));
        for &x in &nodes {
            for &y in &nodes {
                values.push(w(x, y));
            }
        }
        Ok(Self { n, values })
    }

    fn nodes(n: usize) -> Vec<T> {
        (0..=n).map(|j| T::of_usize(j) / T::of_usize(n)).collect()
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    fn at(&self, j: usize, k: usize) -> T {
        self.values[j * (self.n + 1) + k]
    }
}

/// Result of [`solve_interval`].
#[derive(Clone, Debug)]
pub struct IntervalSolution<T> {
    pub values: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// `L_φ max_j Σ_k ω_k |W(x_j, y_k)|`, the sup-norm contraction constant
    /// of the discretized map.
    pub contraction_q: T,
}

/// Picard iteration for `h(x) = ∫₀¹ W(x, y) φ(h(y)) dy + c` with the
/// integral replaced by the trapezoidal rule on the uniform grid.
///
/// `c` is an optional constant drive; with `c = 0` the only reachable state
/// from `h₀ = 0` is zero.
pub fn solve_interval<T: Real>(
    kernel: &IntervalKernel<T>,
    phi: &Activation<T>,
    drive: T,
    tol: T,
    max_iter: usize,
) -> Result<IntervalSolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let n = kernel.n;
    let x = IntervalKernel::<T>::nodes(n);
    let half = T::of(0.5);
    let q = phi.lipschitz()
        * (0..=n)
            .map(|j| {
                (1..=n).fold(T::zero(), |acc, k| {
                    acc + half * (kernel.at(j, k - 1).abs() + kernel.at(j, k).abs()) * (x[k] - x[k - 1])
                })
            })
            .fold(T::zero(), T::max);
    let threshold = if q < T::one() { tol * (T::one() - q) / q.max(T::epsilon()) } else { tol };
    let mut h = vec![T::zero(); n + 1];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let act: Vec<T> = h.iter().map(|&s| phi.eval(s)).collect();
        let next: Vec<T> = (0..=n)
            .map(|j| {
                let mut acc = T::zero();
                for k in 1..=n {
                    acc += (kernel.at(j, k - 1) * act[k - 1] + kernel.at(j, k) * act[k]) * (x[k] - x[k - 1]);
                }
                half * acc + drive
            })
            .collect();
        iterations += 1;
        let step = next.iter().zip(&h).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        h = next;
        if step < threshold {
            converged = true;
            break;
        }
    }
    Ok(IntervalSolution { values: h, iterations, converged, contraction_q: q })
}

/// Wire form of [`NetworkParams`]. Omitted `W_in`, `W_out`, `xi`, `xi_out` are zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkJson {
    pub p: u64,
    #[serde(rename = "L")]
    pub input_level: u32,
    #[serde(rename = "Delta")]
    pub depth: u32,
    pub phi: String,
    pub varphi: String,
    #[serde(rename = "W")]
    pub w: KernelJson,
    #[serde(rename = "W_in", default, skip_serializing_if = "Option::is_none")]
    pub w_in: Option<KernelJson>,
    #[serde(rename = "W_out", default, skip_serializing_if = "Option::is_none")]
    pub w_out: Option<KernelJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<FunctionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_out: Option<FunctionJson>,
}

impl NetworkJson {
    pub fn to_params<T: Real>(&self) -> Result<NetworkParams<T>> {
        let p = Prime::new(self.p)?;
        let mut b = NetworkParams::builder(p, self.input_level, self.depth)
            .phi(Activation::by_name(&self.phi)?)
            .varphi(Activation::by_name(&self.varphi)?)
            .weights(self.w.to_kernel()?);
        if let Some(k) = &self.w_in {
            b = b.input_weights(k.to_kernel()?);
        }
        if let Some(k) = &self.w_out {
            b = b.output_weights(k.to_kernel()?);
        }
        if let Some(f) = &self.xi {
            b = b.bias(f.to_function()?);
        }
        if let Some(f) = &self.xi_out {
            b = b.output_bias(f.to_function()?);
        }
        b.build()
    }
}

impl<T: Real> From<&NetworkParams<T>> for NetworkJson {
    fn from(n: &NetworkParams<T>) -> Self {
        Self {
            p: n.p.get(),
            input_level: n.levels.input(),
            depth: n.levels.depth(),
            phi: n.phi.name().to_string(),
            varphi: n.varphi.name().to_string(),
            w: (&n.w).into(),
            w_in: Some((&n.w_in).into()),
            w_out: Some((&n.w_out).into()),
            xi: Some((&n.xi).into()),
            xi_out: Some((&n.xi_out).into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Prime {
        Prime::new(2).unwrap()
    }

    fn toy(w: f64, xi: f64) -> NetworkParams<f64> {
        NetworkParams::builder(p2(), 0, 1)
            .weights(TreeKernel::constant(p2(), 1, w).unwrap())
            .bias(TreeFunction::constant(p2(), 1, xi).unwrap())
            .build()
            .unwrap()
    }

    fn zero_input() -> TreeFunction<f64> {
        TreeFunction::zeros(p2(), 0).unwrap()
    }

    /// Plain scalar Picard loop, independent of the library solvers.
    fn scalar_picard(a: f64, c: f64) -> f64 {
        let mut s = 0.0f64;
        for _ in 0..10_000 {
            s = a * s.tanh() + c;
        }
        s
    }

    #[test]
    fn forward_map_examples() {
        let x = zero_input();
        let h1 = TreeFunction::constant(p2(), 1, 1.0).unwrap();
        let out = toy(0.5, 1.0).forward_map(&x, &h1).unwrap();
        for v in out.coeffs() {
            assert!((v - (0.5 * 1f64.tanh() + 1.0)).abs() < 1e-15);
            assert!((v - 1.380797).abs() < 1e-6);
        }
        let zero = toy(0.0, 0.0).forward_map(&x, &TreeFunction::zeros(p2(), 1).unwrap()).unwrap();
        assert_eq!(zero.coeffs(), &[0.0, 0.0]);

        let no_w = NetworkParams::builder(p2(), 1, 1)
            .input_weights(TreeKernel::constant(p2(), 1, 2.0).unwrap())
            .bias(TreeFunction::constant(p2(), 2, 0.25).unwrap())
            .build()
            .unwrap();
        let xin = TreeFunction::new(p2(), 1, vec![1.0, 3.0]).unwrap();
        let a = no_w.forward_map(&xin, &TreeFunction::constant(p2(), 2, 5.0).unwrap()).unwrap();
        let b = no_w.forward_map(&xin, &TreeFunction::zeros(p2(), 2).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coeffs(), &[4.25; 4]);
    }

    #[test]
    fn solve_examples() {
        let x = zero_input();
        let r = solve(&toy(0.0, 0.3), &x, 1e-12, 100).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.residual, 0.0);
        assert!(r.stable && r.converged);

        let oracle = scalar_picard(0.5, 1.0);
        assert!((oracle - 1.447609598089905).abs() < 1e-14);
        let r = solve(&toy(0.5, 1.0), &x, 1e-13, 1000).unwrap();
        assert!(r.stable && r.converged && r.norm_bound_ok);
        for v in r.state.coeffs() {
            assert!((v - oracle).abs() < 1e-12);
        }
        assert!(r.residual <= 1e-13);

        let r = solve(&toy(3.0, 1.0), &x, 1e-12, 50).unwrap();
        assert!(!r.stable);
        assert_eq!(r.contraction_q, 3.0);
        assert!(r.norm_bound_ok);
    }

    #[test]
    fn unstable_divergence_is_reported() {
        let net = NetworkParams::builder(p2(), 0, 1)
            .phi(Activation::identity())
            .weights(TreeKernel::constant(p2(), 1, 2.0).unwrap())
            .bias(TreeFunction::constant(p2(), 1, 1.0).unwrap())
            .build()
            .unwrap();
        let r = solve(&net, &zero_input(), 1e-10, 30).unwrap();
        assert!(!r.stable && !r.converged);
        assert_eq!(r.iterations, 30);
        assert!(r.norm_bound.is_none() && r.norm_bound_ok);
    }

    #[test]
    fn solve_rejects_bad_tolerance() {
        assert!(solve(&toy(0.5, 1.0), &zero_input(), 0.0, 10).is_err());
    }

    #[test]
    fn contraction_constant_examples() {
        assert!((toy(-0.7, 0.0).contraction_constant() - 0.7).abs() < 1e-15);
        assert_eq!(toy(0.0, 0.0).contraction_constant(), 0.0);
        let net = NetworkParams::<f64>::builder(p2(), 0, 1)
            .phi(Activation::pwl_sigmoid())
            .weights(TreeKernel::constant(p2(), 1, 0.99).unwrap())
            .build()
            .unwrap();
        assert!((net.contraction_constant() - 0.99).abs() < 1e-15);
    }

    #[test]
    fn constant_state_examples() {
        let x = zero_input();
        assert!(check_constant_state(&toy(0.0, 0.7), &x, 0.7, 1e-12).unwrap());

        // h = 2 φ(h) through the diagonal kernel 2 p^l δ.
        let a = 2.0;
        let net = NetworkParams::builder(p2(), 0, 1)
            .phi(Activation::pwl_sigmoid())
            .weights(TreeKernel::from_fn(p2(), 1, |i, k| if i == k { a * 2.0 } else { 0.0 }).unwrap())
            .build()
            .unwrap();
        assert!(check_constant_state(&net, &x, 2.0, 1e-12).unwrap());
        assert!(!check_constant_state(&net, &x, 0.5, 1e-12).unwrap());

        let fixed = net.forward_map(&x, &TreeFunction::constant(p2(), 1, 2.0).unwrap()).unwrap();
        assert_eq!(fixed.coeffs(), &[2.0, 2.0]);
    }

    #[test]
    fn scalar_solver_examples() {
        let tanh = Activation::<f64>::tanh();
        assert_eq!(solve_constant_scalar(0.0, 5.0, &tanh).unwrap(), 5.0);
        let s = solve_constant_scalar(0.5, 1.0, &tanh).unwrap();
        assert!((s - scalar_picard(0.5, 1.0)).abs() < 1e-13);
        assert_eq!(solve_constant_scalar(0.5, 0.0, &Activation::pwl_sigmoid()).unwrap(), 0.0);

        // a = 3 is outside the Picard regime; bisection finds a root.
        let s = solve_constant_scalar(3.0, 0.5, &tanh).unwrap();
        assert!((s - 3.0 * s.tanh() - 0.5).abs() < 1e-13);

        // Identity with a = 1, c ≠ 0 has no root.
        assert!(solve_constant_scalar(1.0, 1.0, &Activation::identity()).is_err());
    }

    #[test]
    fn budget_examples() {
        assert_eq!(theoretical_iteration_budget(0.5, 1.0, 2.0).unwrap(), 0);
        assert_eq!(theoretical_iteration_budget(0.5, 1.0, 1e-6).unwrap(), 21);
        assert_eq!(theoretical_iteration_budget(1e-300, 1.0, 1e-3).unwrap(), 1);
        assert_eq!(theoretical_iteration_budget(0.0, 1.0, 1e-3).unwrap(), 1);
        assert!(theoretical_iteration_budget(1.0, 1.0, 1e-3).is_err());
        assert!(theoretical_iteration_budget(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn budget_is_minimal() {
        for &(q, f, t) in &[(0.9, 3.0, 1e-10), (0.1, 0.5, 1e-8), (0.75, 1e3, 1e-2)] {
            let n = theoretical_iteration_budget(q, f, t).unwrap();
            assert!(q.powi(n as i32) * f / (1.0 - q) <= t);
            assert!(q.powi(n as i32 - 1) * f / (1.0 - q) > t);
        }
    }

    #[test]
    fn interval_examples() {
        let tanh = Activation::<f64>::tanh();
        let zero = IntervalKernel::sample(8, |_, _| 0.0).unwrap();
        let r = solve_interval(&zero, &tanh, 0.0, 1e-12, 100).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));

        let target = solve_constant_scalar(0.5, 1.0, &tanh).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for n in [4, 8, 64] {
            let k = IntervalKernel::sample(n, |_, _| 0.5).unwrap();
            let r = solve_interval(&k, &tanh, 1.0, 1e-14, 1000).unwrap();
            assert!(r.converged);
            for v in &r.values {
                assert!((v - target).abs() < 1e-10);
            }
            if let Some(p) = prev {
                assert!((p[0] - r.values[0]).abs() < 1e-12);
            }
            prev = Some(r.values);
        }
        assert!(IntervalKernel::<f64>::sample(0, |_, _| 0.0).is_err());
    }

    #[test]
    fn network_json_round_trip() {
        let net = toy(0.5, 1.0);
        let json = NetworkJson::from(&net);
        let back: NetworkParams<f64> = json.to_params().unwrap();
        assert_eq!(back.weights(), net.weights());
        assert_eq!(back.bias(), net.bias());
        assert_eq!(back.phi().name(), "tanh");
        let text = crate::formats::to_json(&json).unwrap();
        assert!(text.contains("\"L\":0") && text.contains("\"Delta\":1"));
    }

    #[test]
    fn network_json_omitted_parts_are_zero() {
        let text = r#"{"p":2,"L":0,"Delta":1,"phi":"tanh","varphi":"tanh","W":{"p":2,"level":1,"coeffs":[1,1,1,1]}}"#;
        let json: NetworkJson = crate::formats::from_json(text, "net").unwrap();
        let net: NetworkParams<f64> = json.to_params().unwrap();
        assert_eq!(net.bias(), &TreeFunction::zeros(p2(), 1).unwrap());
        assert_eq!(net.input_weights().level(), 0);
        assert_eq!(net.output_weights().l2_norm(), 0.0);
    }

    #[test]
    fn builder_rejects_mismatches() {
        let p3 = Prime::new(3).unwrap();
        assert!(NetworkParams::<f64>::builder(p2(), 0, 1).weights(TreeKernel::zeros(p3, 1).unwrap()).build().is_err());
        assert!(NetworkParams::<f64>::builder(p2(), 0, 1).bias(TreeFunction::zeros(p2(), 2).unwrap()).build().is_err());
        assert!(NetworkParams::<f64>::builder(p2(), 1, 1).input_weights(TreeKernel::zeros(p2(), 2).unwrap()).build().is_err());
        assert!(NetworkParams::<f64>::builder(p2(), 1, 0).build().is_err());
        let net = toy(0.5, 1.0);
        assert!(net.forward_map(&TreeFunction::zeros(p2(), 1).unwrap(), &TreeFunction::zeros(p2(), 1).unwrap()).is_err());
    }
}
