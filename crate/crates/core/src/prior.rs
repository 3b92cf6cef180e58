//! Gaussian priors on network parameters at a finite level.
//!
//! Coefficients are jointly Gaussian with mean zero and
//! `Cov[W(I,K), W(J,M)] = K_W(I,K,J,M)`, `Cov[ξ(I), ξ(J)] = K_ξ(I,J)`.
//! With the Haar pairing `⟨f, g⟩ = p^{-l} Σ f g`, a characteristic functional
//! `exp(-½⟨□f, f⟩)` on coefficient vectors then has coefficient covariance
//! equal to the kernel matrix itself, which is the convention used for
//! sampling and densities.
//!
//! Everything here is `f64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::padic::{haar_weight, Prime};
use crate::scalar::pairwise_sum;
use crate::tree::{TreeFunction, TreeKernel};

/// Relative eigenvalue floor for positive semidefiniteness.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Relative jitter added to the diagonal before a Cholesky factorization.
pub const DEFAULT_JITTER: f64 = 1e-12;
/// Dense weight covariances are eigen-checked up to this many balls.
const DENSE_PSD_CHECK_MAX: usize = 8;
/// Draws per accumulation block in [`mc_validate`].
const MC_BLOCK: usize = 1024;

fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() == 0 {
        return Ok(());
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * max {
        return Err(Error::Numeric(format!("{what} is not positive semidefinite (min eigenvalue {min:e}, max {max:e})")));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{what} is {} × {}, not square", m.nrows(), m.ncols())));
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::Domain(format!("{what} is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor; falls back to `jitter · trace / n` on the diagonal
/// when the plain factorization fails. A zero matrix factors as zero.
fn sqrt_factor(m: &DMatrix<f64>, jitter: f64, what: &str) -> Result<DMatrix<f64>> {
    if m.iter().all(|&v| v == 0.0) {
        return Ok(m.clone());
    }
    if let Some(c) = m.clone().cholesky() {
        return Ok(c.l());
    }
    let n = m.nrows();
    let shift = jitter * m.trace() / n as f64;
    let shifted = m + DMatrix::identity(n, n) * shift;
    shifted
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Numeric(format!("{what} is singular beyond jitter {shift:e}")))
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Covariance `K(u, y)` of a bias function.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasCovariance {
    p: Prime,
    level: u32,
    k: DMatrix<f64>,
}

impl BiasCovariance {
    pub fn new(p: Prime, level: u32, k: DMatrix<f64>) -> Result<Self> {
        let n = p.size(level)?;
        if k.shape() != (n, n) {
            return Err(Error::Shape(format!("bias covariance must be {n} × {n}, got {:?}", k.shape())));
        }
        check_finite(&k, "bias covariance")?;
        check_symmetric(&k, "bias covariance")?;
        check_psd(&k, "bias covariance")?;
        Ok(Self { p, level, k })
    }

    /// `σ² δ(u, y)`.
    pub fn iid(p: Prime, level: u32, sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        let n = p.size(level)?;
        Ok(Self { p, level, k: DMatrix::identity(n, n) * sigma2 })
    }

    pub fn zero(p: Prime, level: u32) -> Result<Self> {
        Self::iid(p, level, 0.0)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }
}

fn check_variance(sigma2: f64) -> Result<()> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::Domain(format!("variance must be finite and non-negative, got {sigma2}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightForm {
    /// `σ² δ(u₁, y₁) δ(u₂, y₂)`.
    Iid(f64),
    /// `A(u₁, y₁) B(u₂, y₂)`.
    Separable(DMatrix<f64>, DMatrix<f64>),
    /// `K(u₁, u₂, y₁, y₂)` as an `n² × n²` matrix with row `u₁ n + u₂` and
    /// column `y₁ n + y₂`.
    Dense(DMatrix<f64>),
}

/// Covariance of a weight kernel `W(u₁, u₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightCovariance {
    p: Prime,
    level: u32,
    form: WeightForm,
}

impl WeightCovariance {
    pub fn iid(p: Prime, level: u32, sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        p.size(level)?;
        Ok(Self { p, level, form: WeightForm::Iid(sigma2) })
    }

    pub fn zero(p: Prime, level: u32) -> Result<Self> {
        Self::iid(p, level, 0.0)
    }

    pub fn separable(p: Prime, level: u32, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = p.size(level)?;
        for (m, what) in [(&a, "separable factor A"), (&b, "separable factor B")] {
            if m.shape() != (n, n) {
                return Err(Error::Shape(format!("{what} must be {n} × {n}, got {:?}", m.shape())));
            }
            check_finite(m, what)?;
            check_symmetric(m, what)?;
            check_psd(m, what)?;
        }
        Ok(Self { p, level, form: WeightForm::Separable(a, b) })
    }

    /// `k` is the row-major flattening of the 4-index array with axes
    /// `(u₁, u₂, y₁, y₂)`.
    pub fn dense(p: Prime, level: u32, k: &[f64]) -> Result<Self> {
        let n = p.size(level)?;
        let m = n.checked_mul(n).ok_or_else(|| Error::Capacity { p: p.get(), level, cap: p.max_coeffs() })?;
        if k.len() != m * m {
            return Err(Error::Shape(format!("dense weight covariance needs {} entries, got {}", m * m, k.len())));
        }
        let k = DMatrix::from_row_slice(m, m, k);
        check_finite(&k, "weight covariance")?;
        check_symmetric(&k, "weight covariance (pair exchange)")?;
        if n <= DENSE_PSD_CHECK_MAX {
            check_psd(&k, "weight covariance")?;
        }
        Ok(Self { p, level, form: WeightForm::Dense(k) })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn form(&self) -> &WeightForm {
        &self.form
    }

    fn n(&self) -> usize {
        self.p.size(self.level).expect("checked at construction")
    }

    /// The `n² × n²` matrix of the 4-index kernel.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        match &self.form {
            WeightForm::Iid(s) => DMatrix::identity(n * n, n * n) * *s,
            WeightForm::Separable(a, b) => a.kronecker(b),
            WeightForm::Dense(k) => k.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            WeightForm::Iid(s) => *s == 0.0,
            WeightForm::Separable(a, b) => a.iter().all(|&v| v == 0.0) || b.iter().all(|&v| v == 0.0),
            WeightForm::Dense(k) => k.iter().all(|&v| v == 0.0),
        }
    }

    /// `(p^{-4l} Σ K²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let w = haar_weight::<f64>(self.p, self.level);
        let n = self.n() as f64;
        let total = match &self.form {
            WeightForm::Iid(s) => s * s * n * n,
            WeightForm::Separable(a, b) => a.norm_squared() * b.norm_squared(),
            WeightForm::Dense(k) => k.norm_squared(),
        };
        (w.powi(4) * total).sqrt()
    }

    /// `C(u₁, x) = p^{-2l} Σ_{u₂, y} v(u₂) K(u₁, u₂, x, y) v(y)`.
    pub fn contract(&self, v: &TreeFunction<f64>) -> Result<DMatrix<f64>> {
        let v = self.at_level(v)?;
        let n = self.n();
        let w2 = haar_weight::<f64>(self.p, self.level).powi(2);
        let c = v.coeffs();
        Ok(match &self.form {
            WeightForm::Iid(s) => {
                let ss = pairwise_sum(&c.iter().map(|x| x * x).collect::<Vec<_>>());
                DMatrix::identity(n, n) * (s * w2 * ss)
            }
            WeightForm::Separable(a, b) => {
                let vv = DVector::from_column_slice(c);
                a * (w2 * vv.dot(&(b * &vv)))
            }
            WeightForm::Dense(k) => DMatrix::from_fn(n, n, |u1, x| {
                let terms: Vec<f64> = (0..n * n)
                    .map(|t| {
                        let (u2, y) = (t / n, t % n);
                        c[u2] * k[(u1 * n + u2, x * n + y)] * c[y]
                    })
                    .collect();
                w2 * pairwise_sum(&terms)
            }),
        })
    }

    fn at_level(&self, v: &TreeFunction<f64>) -> Result<TreeFunction<f64>> {
        if v.prime() != self.p {
            return Err(Error::PrimeMismatch { left: self.p.get(), right: v.prime().get() });
        }
        if v.level() > self.level {
            return Err(Error::LevelMismatch(format!("function at level {} is finer than covariance level {}", v.level(), self.level)));
        }
        v.lift(self.level)
    }
}

/// `C_φφ`: covariance of `W φ(h)` for a fixed `h`.
pub fn c_phiphi(cov: &WeightCovariance, h: &TreeFunction<f64>, phi: &Activation<f64>) -> Result<DMatrix<f64>> {
    cov.contract(&h.apply_activation(phi))
}

/// `C_xx`: covariance of `W_in x`.
pub fn c_xx(cov: &WeightCovariance, x: &TreeFunction<f64>) -> Result<DMatrix<f64>> {
    cov.contract(x)
}

/// `(L_φ² ‖h‖₂² ‖K‖₂, ‖C_φφ‖₂)`, both with Haar weighting.
pub fn c_phiphi_norm_bound(cov: &WeightCovariance, h: &TreeFunction<f64>, phi: &Activation<f64>) -> Result<(f64, f64)> {
    let c = c_phiphi(cov, h, phi)?;
    let h = cov.at_level(h)?;
    let w = haar_weight::<f64>(cov.p, cov.level);
    let actual = (w * w * c.norm_squared()).sqrt();
    let hn = h.l2_norm();
    let bound = phi.lipschitz().powi(2) * hn * hn * cov.l2_norm();
    Ok((bound, actual))
}

/// Independent priors on every parameter, all at one level.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkPrior {
    pub w: WeightCovariance,
    pub w_in: WeightCovariance,
    pub xi: BiasCovariance,
    pub w_out: WeightCovariance,
    pub xi_out: BiasCovariance,
}

impl NetworkPrior {
    pub fn new(
        w: WeightCovariance,
        w_in: WeightCovariance,
        xi: BiasCovariance,
        w_out: WeightCovariance,
        xi_out: BiasCovariance,
    ) -> Result<Self> {
        let (p, level) = (w.p, w.level);
        let ok = [w_in.p, xi.p, w_out.p, xi_out.p].iter().all(|&q| q == p)
            && [w_in.level, xi.level, w_out.level, xi_out.level].iter().all(|&l| l == level);
        if !ok {
            return Err(Error::LevelMismatch("all priors must share one prime and level".into()));
        }
        Ok(Self { w, w_in, xi, w_out, xi_out })
    }

    /// The same iid variance on every parameter.
    pub fn iid(p: Prime, level: u32, sigma2: f64) -> Result<Self> {
        let w = WeightCovariance::iid(p, level, sigma2)?;
        let b = BiasCovariance::iid(p, level, sigma2)?;
        Self::new(w.clone(), w.clone(), b.clone(), w, b)
    }

    pub fn prime(&self) -> Prime {
        self.w.p
    }

    pub fn level(&self) -> u32 {
        self.w.level
    }
}

/// Covariances of the hidden update and of the output for fixed states.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorCovariance {
    /// `C_xx + K_ξ + C_φφ`.
    pub hidden: DMatrix<f64>,
    /// `K_ξout + C_ϕϕ`.
    pub output: DMatrix<f64>,
}

pub fn prior_covariance(
    prior: &NetworkPrior,
    h_prev: &TreeFunction<f64>,
    h_cur: &TreeFunction<f64>,
    x: &TreeFunction<f64>,
    phi: &Activation<f64>,
    varphi: &Activation<f64>,
) -> Result<PriorCovariance> {
    let hidden = c_xx(&prior.w_in, x)? + &prior.xi.k + c_phiphi(&prior.w, h_prev, phi)?;
    let output = &prior.xi_out.k + c_phiphi(&prior.w_out, h_cur, varphi)?;
    let hidden = symmetrize(&hidden);
    let output = symmetrize(&output);
    check_psd(&hidden, "hidden covariance")?;
    check_psd(&output, "output covariance")?;
    Ok(PriorCovariance { hidden, output })
}

/// Log density of a mean-zero Gaussian with covariance `cov`, after adding
/// `jitter · trace / n` to the diagonal.
pub fn gaussian_logpdf(cov: &DMatrix<f64>, y: &[f64], jitter: f64) -> Result<f64> {
    let n = y.len();
    if cov.shape() != (n, n) {
        return Err(Error::Shape(format!("covariance {:?} for a vector of length {n}", cov.shape())));
    }
    let shift = jitter * cov.trace() / n as f64;
    let c = (cov + DMatrix::identity(n, n) * shift)
        .cholesky()
        .ok_or_else(|| Error::Numeric("covariance is singular beyond jitter".into()))?;
    let y = DVector::from_column_slice(y);
    let z = c.l().solve_lower_triangular(&y).expect("Cholesky factor is invertible");
    let log_det: f64 = 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * z.norm_squared() - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln())
}

enum WeightSampler {
    Zero,
    Iid(f64),
    Separable(DMatrix<f64>, DMatrix<f64>),
    Dense(DMatrix<f64>),
}

impl WeightSampler {
    fn new(cov: &WeightCovariance) -> Result<Self> {
        if cov.is_zero() {
            return Ok(Self::Zero);
        }
        Ok(match &cov.form {
            WeightForm::Iid(s) => Self::Iid(s.sqrt()),
            WeightForm::Separable(a, b) => Self::Separable(
                sqrt_factor(a, DEFAULT_JITTER, "separable factor A")?,
                sqrt_factor(b, DEFAULT_JITTER, "separable factor B")?,
            ),
            WeightForm::Dense(k) => Self::Dense(sqrt_factor(k, DEFAULT_JITTER, "weight covariance")?),
        })
    }

    /// Row-major `W(u₁, u₂)`.
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut z = || -> f64 { StandardNormal.sample(rng) };
        match self {
            Self::Zero => vec![0.0; n * n],
            Self::Iid(s) => (0..n * n).map(|_| s * z()).collect(),
            Self::Separable(la, lb) => {
                let zm = DMatrix::from_fn(n, n, |_, _| z());
                let w = la * zm * lb.transpose();
                (0..n * n).map(|t| w[(t / n, t % n)]).collect()
            }
            Self::Dense(l) => {
                let zv = DVector::from_fn(n * n, |_, _| z());
                (l * zv).iter().copied().collect()
            }
        }
    }
}

struct BiasSampler(Option<DMatrix<f64>>);

impl BiasSampler {
    fn new(cov: &BiasCovariance) -> Result<Self> {
        if cov.k.iter().all(|&v| v == 0.0) {
            return Ok(Self(None));
        }
        Ok(Self(Some(sqrt_factor(&cov.k, DEFAULT_JITTER, "bias covariance")?)))
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.0 {
            None => vec![0.0; n],
            Some(l) => {
                let zv = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
                (l * zv).iter().copied().collect()
            }
        }
    }
}

struct PriorSampler {
    p: Prime,
    level: u32,
    n: usize,
    w: WeightSampler,
    w_in: WeightSampler,
    xi: BiasSampler,
    w_out: WeightSampler,
    xi_out: BiasSampler,
}

impl PriorSampler {
    fn new(prior: &NetworkPrior) -> Result<Self> {
        Ok(Self {
            p: prior.prime(),
            level: prior.level(),
            n: prior.prime().size(prior.level())?,
            w: WeightSampler::new(&prior.w)?,
            w_in: WeightSampler::new(&prior.w_in)?,
            xi: BiasSampler::new(&prior.xi)?,
            w_out: WeightSampler::new(&prior.w_out)?,
            xi_out: BiasSampler::new(&prior.xi_out)?,
        })
    }

    /// Draw `index` of the stream for `seed`; independent of scheduling.
    fn draw(&self, seed: u64, index: u64) -> ParameterDraw {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let n = self.n;
        let (p, l) = (self.p, self.level);
        let kernel = |c: Vec<f64>| TreeKernel::new(p, l, c).expect("finite draw");
        let function = |c: Vec<f64>| TreeFunction::new(p, l, c).expect("finite draw");
        ParameterDraw {
            w: kernel(self.w.draw(n, &mut rng)),
            w_in: kernel(self.w_in.draw(n, &mut rng)),
            xi: function(self.xi.draw(n, &mut rng)),
            w_out: kernel(self.w_out.draw(n, &mut rng)),
            xi_out: function(self.xi_out.draw(n, &mut rng)),
        }
    }
}

/// One realization of every network parameter, all at the prior level.
#[derive(Clone, Debug)]
pub struct ParameterDraw {
    pub w: TreeKernel<f64>,
    pub w_in: TreeKernel<f64>,
    pub xi: TreeFunction<f64>,
    pub w_out: TreeKernel<f64>,
    pub xi_out: TreeFunction<f64>,
}

impl ParameterDraw {
    /// `W φ(h) + W_in x + ξ`.
    pub fn hidden(&self, h: &TreeFunction<f64>, x: &TreeFunction<f64>, phi: &Activation<f64>) -> Result<TreeFunction<f64>> {
        self.w.apply(&h.apply_activation(phi))?.add(&self.w_in.apply(x)?)?.add(&self.xi)
    }

    /// `W_out ϕ(h) + ξ_out`.
    pub fn output(&self, h: &TreeFunction<f64>, varphi: &Activation<f64>) -> Result<TreeFunction<f64>> {
        self.w_out.apply(&h.apply_activation(varphi))?.add(&self.xi_out)
    }
}

/// `count` independent draws; draw `i` depends only on `(seed, i)`.
pub fn sample_parameters(prior: &NetworkPrior, count: usize, seed: u64) -> Result<Vec<ParameterDraw>> {
    let sampler = PriorSampler::new(prior)?;
    Ok((0..count as u64).into_par_iter().map(|i| sampler.draw(seed, i)).collect())
}

/// Empirical against analytic covariances.
#[derive(Clone, Debug)]
pub struct McReport {
    pub n_draws: usize,
    pub seed: u64,
    pub analytic: PriorCovariance,
    pub empirical_hidden: DMatrix<f64>,
    pub empirical_output: DMatrix<f64>,
    pub z_hidden: DMatrix<f64>,
    pub z_output: DMatrix<f64>,
    /// Over the upper triangles of both matrices.
    pub max_abs_z: f64,
    pub frac_within_3se: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct McSummary {
    pub max_abs_z: f64,
    pub frac_within_3se: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl McReport {
    pub fn summary(&self) -> McSummary {
        McSummary { max_abs_z: self.max_abs_z, frac_within_3se: self.frac_within_3se, n: self.n_draws, seed: self.seed }
    }
}

/// Outer-product sums `Σ h hᵀ` and `Σ y yᵀ` over a run of draws.
fn accumulate(
    sampler: &PriorSampler,
    seed: u64,
    range: std::ops::Range<u64>,
    h: &TreeFunction<f64>,
    x: &TreeFunction<f64>,
    phi: &Activation<f64>,
    varphi: &Activation<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = sampler.n;
    let mut sh = DMatrix::zeros(n, n);
    let mut sy = DMatrix::zeros(n, n);
    for i in range {
        let d = sampler.draw(seed, i);
        let hv = DVector::from_column_slice(d.hidden(h, x, phi)?.coeffs());
        let yv = DVector::from_column_slice(d.output(h, varphi)?.coeffs());
        sh += &hv * hv.transpose();
        sy += &yv * yv.transpose();
    }
    Ok((sh, sy))
}

fn pairwise_matrix_sum(parts: &[(DMatrix<f64>, DMatrix<f64>)]) -> (DMatrix<f64>, DMatrix<f64>) {
    match parts.len() {
        1 => parts[0].clone(),
        n => {
            let (a, b) = pairwise_matrix_sum(&parts[..n / 2]);
            let (c, d) = pairwise_matrix_sum(&parts[n / 2..]);
            (a + c, b + d)
        }
    }
}

fn z_scores(emp: &DMatrix<f64>, ana: &DMatrix<f64>, draws: usize) -> DMatrix<f64> {
    let n = ana.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let se = ((ana[(i, i)] * ana[(j, j)] + ana[(i, j)].powi(2)) / draws as f64).sqrt();
        let diff = emp[(i, j)] - ana[(i, j)];
        if se > 0.0 {
            diff / se
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    })
}

/// Simulates `W φ(h) + W_in x + ξ` and `W_out ϕ(h) + ξ_out` for `n_draws`
/// parameter draws and compares second moments with [`prior_covariance`].
pub fn mc_validate(
    prior: &NetworkPrior,
    h: &TreeFunction<f64>,
    x: &TreeFunction<f64>,
    phi: &Activation<f64>,
    varphi: &Activation<f64>,
    n_draws: usize,
    seed: u64,
) -> Result<McReport> {
    if n_draws < 2 {
        return Err(Error::Domain(format!("need at least 2 draws, got {n_draws}")));
    }
    let analytic = prior_covariance(prior, h, h, x, phi, varphi)?;
    let sampler = PriorSampler::new(prior)?;
    let h = h.lift(prior.level())?;
    let x = x.lift(prior.level())?;
    let blocks = n_draws.div_ceil(MC_BLOCK);
    let parts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = (b * MC_BLOCK) as u64;
            let end = ((b + 1) * MC_BLOCK).min(n_draws) as u64;
            accumulate(&sampler, seed, start..end, &h, &x, phi, varphi)
        })
        .collect::<Result<Vec<_>>>()?;
    let (sh, sy) = pairwise_matrix_sum(&parts);
    let empirical_hidden = sh / n_draws as f64;
    let empirical_output = sy / n_draws as f64;
    let z_hidden = z_scores(&empirical_hidden, &analytic.hidden, n_draws);
    let z_output = z_scores(&empirical_output, &analytic.output, n_draws);
    let upper: Vec<f64> = [&z_hidden, &z_output]
        .iter()
        .flat_map(|z| (0..z.nrows()).flat_map(move |i| (i..z.ncols()).map(move |j| z[(i, j)])))
        .collect();
    let max_abs_z = upper.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let frac_within_3se = upper.iter().filter(|z| z.abs() <= 3.0).count() as f64 / upper.len() as f64;
    Ok(McReport {
        n_draws,
        seed,
        analytic,
        empirical_hidden,
        empirical_output,
        z_hidden,
        z_output,
        max_abs_z,
        frac_within_3se,
    })
}

/// Row-per-line CSV of a covariance matrix.
pub fn covariance_csv(m: &DMatrix<f64>) -> String {
    crate::formats::matrix_csv(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Wire form of a weight covariance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum WeightCovJson {
    Iid {
        sigma2: f64,
    },
    Separable {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
    Dense {
        #[serde(rename = "K")]
        k: Vec<f64>,
        shape: Vec<usize>,
    },
}

impl WeightCovJson {
    pub fn to_covariance(&self, p: Prime, level: u32) -> Result<WeightCovariance> {
        match self {
            Self::Iid { sigma2 } => WeightCovariance::iid(p, level, *sigma2),
            Self::Separable { a, b } => {
                WeightCovariance::separable(p, level, matrix_from_rows(a, "A")?, matrix_from_rows(b, "B")?)
            }
            Self::Dense { k, shape } => {
                let n = p.size(level)?;
                if shape.as_slice() != [n, n, n, n] {
                    return Err(Error::Shape(format!("dense weight covariance shape {shape:?}, expected [{n}, {n}, {n}, {n}]")));
                }
                WeightCovariance::dense(p, level, k)
            }
        }
    }
}

impl From<&WeightCovariance> for WeightCovJson {
    fn from(c: &WeightCovariance) -> Self {
        match &c.form {
            WeightForm::Iid(s) => Self::Iid { sigma2: *s },
            WeightForm::Separable(a, b) => Self::Separable { a: matrix_rows(a), b: matrix_rows(b) },
            WeightForm::Dense(k) => {
                let n = c.n();
                Self::Dense { k: matrix_rows(k).concat(), shape: vec![n; 4] }
            }
        }
    }
}

/// Wire form of a bias covariance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum BiasCovJson {
    Iid {
        sigma2: f64,
    },
    Dense {
        #[serde(rename = "K")]
        k: Vec<Vec<f64>>,
    },
}

impl BiasCovJson {
    pub fn to_covariance(&self, p: Prime, level: u32) -> Result<BiasCovariance> {
        match self {
            Self::Iid { sigma2 } => BiasCovariance::iid(p, level, *sigma2),
            Self::Dense { k } => BiasCovariance::new(p, level, matrix_from_rows(k, "K")?),
        }
    }
}

fn zero_weight() -> WeightCovJson {
    WeightCovJson::Iid { sigma2: 0.0 }
}

fn zero_bias() -> BiasCovJson {
    BiasCovJson::Iid { sigma2: 0.0 }
}

/// Wire form of a [`NetworkPrior`]; missing parameters get zero covariance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PriorJson {
    pub p: u64,
    pub level: u32,
    #[serde(rename = "W", default = "zero_weight")]
    pub w: WeightCovJson,
    #[serde(rename = "W_in", default = "zero_weight")]
    pub w_in: WeightCovJson,
    #[serde(default = "zero_bias")]
    pub xi: BiasCovJson,
    #[serde(rename = "W_out", default = "zero_weight")]
    pub w_out: WeightCovJson,
    #[serde(default = "zero_bias")]
    pub xi_out: BiasCovJson,
}

impl PriorJson {
    pub fn to_prior(&self) -> Result<NetworkPrior> {
        let p = Prime::new(self.p)?;
        let l = self.level;
        NetworkPrior::new(
            self.w.to_covariance(p, l)?,
            self.w_in.to_covariance(p, l)?,
            self.xi.to_covariance(p, l)?,
            self.w_out.to_covariance(p, l)?,
            self.xi_out.to_covariance(p, l)?,
        )
    }
}
