//! Zero-mean Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! [`PosteriorModel::fit`] factors `K + (σ_n² + jitter) I` once; predictions,
//! their input gradients and the marginal likelihood all reuse that factor.
//! Hyperparameters live in the caller's input units. The likelihood search in
//! [`mle_fit`] works in log space with bounds expressed relative to the domain
//! widths, which is equivalent to fitting on the unit box.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative jitter added to the Gram diagonal on the first attempt.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidInput("domain needs at least one dimension".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!(
                    "domain bound {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit box `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    /// Length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (v - l) / (u - l))
            .collect()
    }

    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (l, u))| (l + t * (u - l)).clamp(*l, *u))
            .collect()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let unit: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.from_unit(&unit)
    }
}

/// Observed inputs and outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        check_dim(inputs.len(), outputs.len())?;
        if let Some(first) = inputs.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::InvalidInput("zero-dimensional input".into()));
            }
            for x in &inputs {
                check_dim(d, x.len())?;
            }
        }
        if inputs.iter().flatten().chain(&outputs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains non-finite values".into()));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Checks that every input lies inside `domain`.
    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        match self.inputs.iter().position(|x| !domain.contains(x)) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidInput(format!(
                "input {i} lies outside the domain"
            ))),
        }
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if let Some(d) = self.dim() {
            check_dim(d, x.len())?;
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite observation".into()));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }
}

/// Squared-exponential ARD hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelHyperparams {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let h = Self {
            lengthscales,
            signal_variance,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn isotropic(dim: usize, lengthscale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        Self::new(vec![lengthscale; dim], signal_variance, noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::InvalidInput("no lengthscales".into()));
        }
        if self.lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "lengthscales must be positive: {:?}",
                self.lengthscales
            )));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be nonnegative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// `σ_s² · exp(−½ Σ ((x1ᵢ − x2ᵢ)/ℓᵢ)²)`
pub fn se_kernel(x1: &[f64], x2: &[f64], hyper: &KernelHyperparams) -> Result<f64> {
    check_dim(hyper.dim(), x1.len())?;
    check_dim(hyper.dim(), x2.len())?;
    Ok(kernel_unchecked(x1, x2, &hyper.lengthscales, hyper.signal_variance))
}

#[inline]
fn kernel_unchecked(x1: &[f64], x2: &[f64], lengthscales: &[f64], signal_variance: f64) -> f64 {
    let r2: f64 = x1
        .iter()
        .zip(x2)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let z = (a - b) / l;
            z * z
        })
        .sum();
    signal_variance * (-0.5 * r2).exp()
}

/// Posterior moments at one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveStats {
    /// μ_x
    pub mean: f64,
    /// σ_x², variance of the latent value
    pub latent_variance: f64,
    /// σ_+² = σ_x² + σ_n², variance of a noisy observation
    pub observation_variance: f64,
}

impl PredictiveStats {
    pub fn new(mean: f64, latent_variance: f64, noise_variance: f64) -> Self {
        Self {
            mean,
            latent_variance,
            observation_variance: latent_variance + noise_variance,
        }
    }

    pub fn latent_std(&self) -> f64 {
        self.latent_variance.sqrt()
    }

    pub fn observation_std(&self) -> f64 {
        self.observation_variance.sqrt()
    }

    pub fn noise_variance(&self) -> f64 {
        (self.observation_variance - self.latent_variance).max(0.0)
    }
}

/// Input gradients of μ_x and σ_x².
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveGradient {
    pub mean: Vec<f64>,
    pub latent_variance: Vec<f64>,
}

/// A fitted GP posterior. Immutable once built.
#[derive(Debug, Clone)]
pub struct PosteriorModel {
    dataset: Dataset,
    hyper: KernelHyperparams,
    /// row-major n × d copy of the inputs
    flat_inputs: Vec<f64>,
    cholesky: DMatrix<f64>,
    dual_weights: DVector<f64>,
    jitter: f64,
}

struct Factor {
    lower: DMatrix<f64>,
    jitter: f64,
}

fn gram(dataset: &Dataset, hyper: &KernelHyperparams) -> DMatrix<f64> {
    let n = dataset.len();
    let x = dataset.inputs();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hyper.signal_variance;
        for j in 0..i {
            let v = kernel_unchecked(&x[i], &x[j], &hyper.lengthscales, hyper.signal_variance);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky of `signal + (σ_n² + jitter) I` with the escalating jitter policy.
fn factor(signal: &DMatrix<f64>, hyper: &KernelHyperparams) -> Result<Factor> {
    let n = signal.nrows();
    let mut relative = JITTER_START;
    loop {
        let jitter = relative * hyper.signal_variance;
        let mut a = signal.clone();
        for i in 0..n {
            a[(i, i)] += hyper.noise_variance + jitter;
        }
        if let Some(chol) = a.clone().cholesky() {
            return Ok(Factor {
                lower: chol.unpack(),
                jitter,
            });
        }
        if relative >= JITTER_MAX * (1.0 - 1e-12) {
            let eig = a.symmetric_eigenvalues();
            let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            return Err(Error::Cholesky {
                jitter,
                condition: max / min.abs().max(f64::MIN_POSITIVE),
            });
        }
        log::debug!("Cholesky failed with relative jitter {relative:e}; escalating");
        relative *= 10.0;
    }
}

impl PosteriorModel {
    /// Conditions the zero-mean prior on `dataset`. An empty dataset yields the prior.
    pub fn fit(dataset: Dataset, hyper: KernelHyperparams) -> Result<Self> {
        hyper.validate()?;
        if let Some(d) = dataset.dim() {
            check_dim(hyper.dim(), d)?;
        }
        let flat_inputs: Vec<f64> = dataset.inputs().iter().flatten().copied().collect();
        let n = dataset.len();
        if n == 0 {
            return Ok(Self {
                dataset,
                hyper,
                flat_inputs,
                cholesky: DMatrix::zeros(0, 0),
                dual_weights: DVector::zeros(0),
                jitter: 0.0,
            });
        }
        let Factor { lower, jitter } = factor(&gram(&dataset, &hyper), &hyper)?;
        let y = DVector::from_column_slice(dataset.outputs());
        let tmp = lower
            .solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal");
        let dual_weights = lower
            .tr_solve_lower_triangular(&tmp)
            .expect("Cholesky factor has a positive diagonal");
        Ok(Self {
            dataset,
            hyper,
            flat_inputs,
            cholesky: lower,
            dual_weights,
            jitter,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.hyper.dim()
    }

    /// Lower-triangular factor of `K + (σ_n² + jitter) I`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.cholesky
    }

    /// `(K + (σ_n² + jitter) I)⁻¹ y`
    pub fn dual_weights(&self) -> &DVector<f64> {
        &self.dual_weights
    }

    /// Absolute jitter added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross_kernel(&self, x: &[f64]) -> DVector<f64> {
        let d = self.dim();
        let n = self.dataset.len();
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                kernel_unchecked(
                    x,
                    &self.flat_inputs[i * d..(i + 1) * d],
                    &self.hyper.lengthscales,
                    self.hyper.signal_variance,
                )
            }),
        )
    }

    fn finish(&self, mean: f64, reduction: f64) -> PredictiveStats {
        let mut var = self.hyper.signal_variance - reduction;
        if var < 0.0 {
            log::trace!("clamping negative posterior variance {var:e} to zero");
            var = 0.0;
        }
        PredictiveStats::new(mean, var, self.hyper.noise_variance)
    }

    /// Posterior mean and variances at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<PredictiveStats> {
        check_dim(self.dim(), x.len())?;
        if self.dataset.is_empty() {
            return Ok(self.finish(0.0, 0.0));
        }
        let k = self.cross_kernel(x);
        let mean = k.dot(&self.dual_weights);
        let v = self
            .cholesky
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal");
        Ok(self.finish(mean, v.norm_squared()))
    }

    /// Posterior mean alone.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if self.dataset.is_empty() {
            return Ok(0.0);
        }
        Ok(self.cross_kernel(x).dot(&self.dual_weights))
    }

    /// Prediction plus gradients of μ_x and σ_x² with respect to `x`.
    pub fn predict_with_gradient(&self, x: &[f64]) -> Result<(PredictiveStats, PredictiveGradient)> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim();
        if self.dataset.is_empty() {
            return Ok((
                self.finish(0.0, 0.0),
                PredictiveGradient {
                    mean: vec![0.0; d],
                    latent_variance: vec![0.0; d],
                },
            ));
        }
        let k = self.cross_kernel(x);
        let mean = k.dot(&self.dual_weights);
        let v = self
            .cholesky
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal");
        let beta = self
            .cholesky
            .tr_solve_lower_triangular(&v)
            .expect("Cholesky factor has a positive diagonal");
        let stats = self.finish(mean, v.norm_squared());

        // ∂k_i/∂x_j = −k_i (x_j − x_ij) / ℓ_j²
        let mut grad_mean = vec![0.0; d];
        let mut grad_var = vec![0.0; d];
        for i in 0..self.dataset.len() {
            let xi = &self.flat_inputs[i * d..(i + 1) * d];
            for j in 0..d {
                let l = self.hyper.lengthscales[j];
                let dk = -k[i] * (x[j] - xi[j]) / (l * l);
                grad_mean[j] += self.dual_weights[i] * dk;
                grad_var[j] -= 2.0 * beta[i] * dk;
            }
        }
        if stats.latent_variance == 0.0 {
            grad_var.iter_mut().for_each(|g| *g = g.max(0.0));
        }
        Ok((
            stats,
            PredictiveGradient {
                mean: grad_mean,
                latent_variance: grad_var,
            },
        ))
    }

    /// Posterior mean and its gradient.
    pub fn mean_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim();
        if self.dataset.is_empty() {
            return Ok((0.0, vec![0.0; d]));
        }
        let k = self.cross_kernel(x);
        let mut grad = vec![0.0; d];
        for i in 0..self.dataset.len() {
            let xi = &self.flat_inputs[i * d..(i + 1) * d];
            for j in 0..d {
                let l = self.hyper.lengthscales[j];
                grad[j] -= self.dual_weights[i] * k[i] * (x[j] - xi[j]) / (l * l);
            }
        }
        Ok((k.dot(&self.dual_weights), grad))
    }
}

/// `log p(y | X, θ)` under the zero-mean GP, including the applied jitter.
pub fn log_marginal_likelihood(dataset: &Dataset, hyper: &KernelHyperparams) -> Result<f64> {
    lml(dataset, hyper, false).map(|(v, _)| v)
}

/// Log marginal likelihood and its gradient with respect to
/// `[ln ℓ_1, …, ln ℓ_d, ln σ_s², ln σ_n²]`.
pub fn log_marginal_likelihood_with_gradient(
    dataset: &Dataset,
    hyper: &KernelHyperparams,
) -> Result<(f64, Vec<f64>)> {
    lml(dataset, hyper, true)
}

fn lml(dataset: &Dataset, hyper: &KernelHyperparams, with_grad: bool) -> Result<(f64, Vec<f64>)> {
    hyper.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput(
            "marginal likelihood of an empty dataset".into(),
        ));
    }
    let d = hyper.dim();
    check_dim(d, dataset.dim().unwrap_or(d))?;
    let n = dataset.len();
    let signal = gram(dataset, hyper);
    let Factor { lower, .. } = factor(&signal, hyper)?;
    let y = DVector::from_column_slice(dataset.outputs());
    let tmp = lower.solve_lower_triangular(&y).expect("positive diagonal");
    let alpha = lower.tr_solve_lower_triangular(&tmp).expect("positive diagonal");
    let log_det_half: f64 = (0..n).map(|i| lower[(i, i)].ln()).sum();
    let value = -0.5 * y.dot(&alpha) - log_det_half - 0.5 * n as f64 * LN_2PI;
    if !with_grad {
        return Ok((value, Vec::new()));
    }

    // ∂/∂θ = ½ tr((ααᵀ − A⁻¹) ∂A/∂θ)
    let ident = DMatrix::<f64>::identity(n, n);
    let linv = lower.solve_lower_triangular(&ident).expect("positive diagonal");
    let ainv = linv.transpose() * &linv;
    let mut w = &alpha * alpha.transpose();
    w -= &ainv;

    let x = dataset.inputs();
    let mut grad = vec![0.0; d + 2];
    for i in 0..n {
        for j in 0..n {
            let wk = w[(i, j)] * signal[(i, j)];
            for (k, g) in grad.iter_mut().take(d).enumerate() {
                let z = (x[i][k] - x[j][k]) / hyper.lengthscales[k];
                *g += 0.5 * wk * z * z;
            }
            grad[d] += 0.5 * wk;
        }
        grad[d + 1] += 0.5 * w[(i, i)] * hyper.noise_variance;
    }
    Ok((value, grad))
}

/// Settings for [`mle_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleConfig {
    /// Widths of the input box; lengthscales are searched in `[1e-3, 10]·width`.
    pub domain_widths: Vec<f64>,
    pub starts: usize,
    pub steps_per_start: usize,
    pub seed: u64,
    /// `Some(v)` pins σ_n² to `v`; `None` learns it.
    pub fixed_noise_variance: Option<f64>,
}

impl MleConfig {
    pub fn new(domain: &Domain, seed: u64) -> Self {
        Self {
            domain_widths: domain.widths(),
            starts: 8,
            steps_per_start: 40,
            seed,
            fixed_noise_variance: None,
        }
    }

    pub fn with_fixed_noise(mut self, noise_variance: f64) -> Self {
        self.fixed_noise_variance = Some(noise_variance);
        self
    }
}

/// Output scale used to place the signal-variance search box: the second
/// moment of the outputs, never below one.
pub fn output_scale(dataset: &Dataset) -> f64 {
    let n = dataset.len().max(1) as f64;
    let m2 = dataset.outputs().iter().map(|y| y * y).sum::<f64>() / n;
    m2.max(1.0)
}

struct SearchSpace {
    lo: Vec<f64>,
    hi: Vec<f64>,
    dim: usize,
    fixed_noise: Option<f64>,
}

impl SearchSpace {
    fn encode(&self, h: &KernelHyperparams) -> Vec<f64> {
        let mut p: Vec<f64> = h.lengthscales.iter().map(|l| l.ln()).collect();
        p.push(h.signal_variance.ln());
        if self.fixed_noise.is_none() {
            p.push(h.noise_variance.max(f64::MIN_POSITIVE).ln());
        }
        p
    }

    fn decode(&self, p: &[f64]) -> KernelHyperparams {
        KernelHyperparams {
            lengthscales: p[..self.dim].iter().map(|v| v.exp()).collect(),
            signal_variance: p[self.dim].exp(),
            noise_variance: self.fixed_noise.unwrap_or_else(|| p[self.dim + 1].exp()),
        }
    }

    fn project(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn evaluate(&self, dataset: &Dataset, p: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (v, g) = log_marginal_likelihood_with_gradient(dataset, &self.decode(p)).ok()?;
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let mut grad = g[..=self.dim].to_vec();
        if self.fixed_noise.is_none() {
            grad.push(g[self.dim + 1]);
        }
        Some((v, grad))
    }
}

/// Maximum-likelihood hyperparameters by multi-start projected gradient
/// ascent in log space. The result never has lower likelihood than `init`.
pub fn mle_fit(
    dataset: &Dataset,
    init: &KernelHyperparams,
    config: &MleConfig,
) -> Result<KernelHyperparams> {
    init.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("MLE on an empty dataset".into()));
    }
    let d = init.dim();
    check_dim(d, config.domain_widths.len())?;
    check_dim(d, dataset.dim().unwrap_or(d))?;

    let mut init = init.clone();
    if let Some(noise) = config.fixed_noise_variance {
        init.noise_variance = noise;
        init.validate()?;
    }
    let scale = output_scale(dataset);
    let mut lo: Vec<f64> = config.domain_widths.iter().map(|w| (1e-3 * w).ln()).collect();
    let mut hi: Vec<f64> = config.domain_widths.iter().map(|w| (10.0 * w).ln()).collect();
    lo.push((1e-4 * scale).ln());
    hi.push((1e2 * scale).ln());
    if config.fixed_noise_variance.is_none() {
        lo.push((1e-8 * scale).ln());
        hi.push(scale.ln());
    }
    let space = SearchSpace {
        lo,
        hi,
        dim: d,
        fixed_noise: config.fixed_noise_variance,
    };

    let mut best_value = log_marginal_likelihood(dataset, &init).unwrap_or(f64::NEG_INFINITY);
    let mut best = init.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut start = space.encode(&init);
    space.project(&mut start);
    for s in 0..config.starts.max(1) {
        if s > 0 {
            start = space
                .lo
                .iter()
                .zip(&space.hi)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect();
        }
        if let Some((value, p)) = ascend(dataset, &space, start.clone(), config.steps_per_start) {
            if value > best_value {
                best_value = value;
                best = space.decode(&p);
            }
        }
    }
    Ok(best)
}

fn ascend(dataset: &Dataset, space: &SearchSpace, mut p: Vec<f64>, steps: usize) -> Option<(f64, Vec<f64>)> {
    let (mut value, mut grad) = space.evaluate(dataset, &p)?;
    let mut step = 0.5;
    for _ in 0..steps {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-10 || step < 1e-8 {
            break;
        }
        let mut cand: Vec<f64> = p.iter().zip(&grad).map(|(v, g)| v + step * g / norm).collect();
        space.project(&mut cand);
        match space.evaluate(dataset, &cand) {
            Some((v, g)) if v > value => {
                p = cand;
                value = v;
                grad = g;
                step = (step * 1.5).min(2.0);
            }
            _ => step *= 0.5,
        }
    }
    Some((value, p))
}
