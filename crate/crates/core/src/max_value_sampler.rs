//! Max-value samples f* for MES and RMES.
//!
//! The default route draws an approximate GP posterior function with random
//! Fourier features (exact conditioning of the feature weights on the data)
//! and maximizes it over the box. A Gumbel approximation to the distribution
//! of the maximum over a grid is available but is not used by default.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::acq_optimizer::hill_climb;
use crate::error::{check_dim, Error, Result};
use crate::gaussian_stats::log_std_cdf;
use crate::gp::{Domain, PosteriorModel};
use crate::rng::derive_seed;

/// A smooth function `x ↦ Σ_j w_j cos(ω_j·x + b_j)` approximating a draw
/// from the GP posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorFunctionSample {
    dim: usize,
    /// dimension-major d × m, so the per-feature loops vectorize
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    /// feature amplitude folded in
    weights: Vec<f64>,
}

// 2π split so that k·C1 and k·C2 are exact for |k| < 2²⁷.
const TWO_PI_C1: f64 = 6.283_185_243_606_567;
const TWO_PI_C2: f64 = 6.357_301_884_918_343e-8;
const TWO_PI_C3: f64 = 2.449_293_598_294_706_4e-16;
const INV_TWO_PI: f64 = 0.159_154_943_091_895_35;
// adding and subtracting 1.5·2⁵² rounds to the nearest integer
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

/// `(cos x, sin x)` without branches or library calls, so loops over
/// features vectorize. Three-part reduction modulo 2π, Taylor series of the
/// half angle on [−π/2, π/2] (truncation < 1e-17), double-angle
/// reconstruction. Absolute error is a few ulps for |x| up to ~1e8, far
/// beyond any feature argument met in practice.
#[inline(always)]
fn cos_sin(x: f64) -> (f64, f64) {
    let k = (x * INV_TWO_PI + ROUND_MAGIC) - ROUND_MAGIC;
    let r = ((x - k * TWO_PI_C1) - k * TWO_PI_C2) - k * TWO_PI_C3;
    let s = 0.5 * r;
    let z = s * s;
    // 1/n! for the even and odd series, highest order first
    let c = 1.0
        + z * (-1.0 / 2.0
            + z * (1.0 / 24.0
                + z * (-1.0 / 720.0
                    + z * (1.0 / 40_320.0
                        + z * (-1.0 / 3_628_800.0
                            + z * (1.0 / 479_001_600.0
                                + z * (-1.0 / 87_178_291_200.0
                                    + z * (1.0 / 20_922_789_888_000.0
                                        + z * (-1.0 / 6_402_373_705_728_000.0
                                            + z * (1.0 / 2_432_902_008_176_640_000.0))))))))));
    let sn = s
        * (1.0
            + z * (-1.0 / 6.0
                + z * (1.0 / 120.0
                    + z * (-1.0 / 5_040.0
                        + z * (1.0 / 362_880.0
                            + z * (-1.0 / 39_916_800.0
                                + z * (1.0 / 6_227_020_800.0
                                    + z * (-1.0 / 1_307_674_368_000.0
                                        + z * (1.0 / 355_687_428_096_000.0
                                            + z * (-1.0 / 121_645_100_408_832_000.0
                                                + z * (1.0 / 51_090_942_171_709_440_000.0)))))))))));
    (1.0 - 2.0 * sn * sn, 2.0 * sn * c)
}

impl PosteriorFunctionSample {
    pub fn feature_count(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature arguments `ω_j·x + b_j`.
    fn arguments(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let m = self.phases.len();
        let mut args = self.phases.clone();
        for (i, xi) in x.iter().enumerate() {
            for (a, w) in args.iter_mut().zip(&self.frequencies[i * m..(i + 1) * m]) {
                *a += w * xi;
            }
        }
        args
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut terms = self.arguments(x);
        for (t, w) in terms.iter_mut().zip(&self.weights) {
            *t = w * cos_sin(*t).0;
        }
        terms.iter().sum()
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.phases.len();
        let mut cos_terms = self.arguments(x);
        let mut sin_terms = vec![0.0; m];
        for ((c, s), w) in cos_terms.iter_mut().zip(sin_terms.iter_mut()).zip(&self.weights) {
            let (cv, sv) = cos_sin(*c);
            *c = w * cv;
            *s = w * sv;
        }
        let grad = (0..self.dim)
            .map(|i| {
                -self.frequencies[i * m..(i + 1) * m]
                    .iter()
                    .zip(&sin_terms)
                    .map(|(o, s)| o * s)
                    .sum::<f64>()
            })
            .collect();
        (cos_terms.iter().sum(), grad)
    }
}

/// Draws a posterior function with `feature_count` random Fourier features.
///
/// Frequencies come from the SE spectral density `𝓝(0, diag(ℓ⁻²))`, phases
/// are uniform on `[0, 2π)`. The prior weight draw θ₀ is conditioned on the
/// data by the pathwise update
/// `θ = θ₀ + Φᵀ (ΦΦᵀ + σ_n² I)⁻¹ (y − Φθ₀ − ε)`, `ε ~ 𝓝(0, σ_n² I)`,
/// which is an exact posterior draw for the feature-space model.
pub fn draw_posterior_function<R: Rng + ?Sized>(
    model: &PosteriorModel,
    feature_count: usize,
    rng: &mut R,
) -> Result<PosteriorFunctionSample> {
    if feature_count == 0 {
        return Err(Error::InvalidInput("feature count must be at least one".into()));
    }
    let hyper = model.hyperparams();
    let d = hyper.dim();
    let m = feature_count;
    let amplitude = (2.0 * hyper.signal_variance / m as f64).sqrt();

    let mut frequencies = vec![0.0; m * d];
    for j in 0..m {
        for (i, l) in hyper.lengthscales.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            frequencies[i * m + j] = z / l;
        }
    }
    let phases: Vec<f64> = (0..m)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    let mut theta: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();

    let data = model.dataset();
    let n = data.len();
    if n > 0 {
        let noise = hyper.noise_variance;
        let phi = DMatrix::from_fn(n, m, |i, j| {
            let x = &data.inputs()[i];
            let arg = (0..d).fold(phases[j], |a, k| a + frequencies[k * m + j] * x[k]);
            amplitude * cos_sin(arg).0
        });
        let prior_at_data = &phi * DVector::from_column_slice(&theta);
        let residual = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let eps: f64 = rng.sample(StandardNormal);
                data.outputs()[i] - prior_at_data[i] - noise.sqrt() * eps
            }),
        );
        let gram = &phi * phi.transpose();
        let solved = solve_spd_with_jitter(gram, noise, hyper.signal_variance)?
            .solve(&residual);
        let update = phi.transpose() * solved;
        for (t, u) in theta.iter_mut().zip(update.iter()) {
            *t += u;
        }
    }
    let weights = theta.iter().map(|t| amplitude * t).collect();
    Ok(PosteriorFunctionSample {
        dim: d,
        frequencies,
        phases,
        weights,
    })
}

fn solve_spd_with_jitter(
    gram: DMatrix<f64>,
    noise: f64,
    signal_variance: f64,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = gram.nrows();
    let mut relative = crate::gp::JITTER_START;
    loop {
        let jitter = relative * signal_variance;
        let mut a = gram.clone();
        for i in 0..n {
            a[(i, i)] += noise + jitter;
        }
        if let Some(c) = a.cholesky() {
            return Ok(c);
        }
        if relative >= crate::gp::JITTER_MAX * (1.0 - 1e-12) {
            return Err(Error::Cholesky {
                jitter,
                condition: f64::INFINITY,
            });
        }
        relative *= 10.0;
    }
}

/// Budgets for maximizing posterior function samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub feature_count: usize,
    pub restarts: usize,
    /// Gradient-ascent evaluations per restart.
    pub steps: usize,
    /// Random points scanned to choose restart locations.
    pub scan_points: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            feature_count: 1024,
            restarts: 10,
            steps: 200,
            scan_points: 1000,
        }
    }
}

/// Maximum of a function sample and where it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMaximum {
    pub value: f64,
    pub argmax: Vec<f64>,
}

/// Maximizes a function sample over the box: a random scan picks the
/// `restarts` best starting points, each refined by projected gradient
/// ascent. The result is at least the value at every probed point.
pub fn maximize_function_sample<R: Rng + ?Sized>(
    sample: &PosteriorFunctionSample,
    domain: &Domain,
    restarts: usize,
    steps: usize,
    scan_points: usize,
    rng: &mut R,
) -> Result<SampleMaximum> {
    check_dim(domain.dim(), sample.dim())?;
    if restarts == 0 {
        return Err(Error::InvalidInput("at least one restart is required".into()));
    }
    let scan: Vec<Vec<f64>> = (0..scan_points.max(restarts))
        .map(|_| (0..domain.dim()).map(|_| rng.random::<f64>()).collect())
        .collect();
    let values: Vec<f64> = scan.iter().map(|u| sample.evaluate(&domain.from_unit(u))).collect();
    let mut order: Vec<usize> = (0..scan.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut best = SampleMaximum {
        value: values[order[0]],
        argmax: domain.from_unit(&scan[order[0]]),
    };
    let widths = domain.widths();
    for &s in order.iter().take(restarts) {
        let objective = |u: &[f64]| {
            let (v, g) = sample.value_and_gradient(&domain.from_unit(u));
            Some((v, g.iter().zip(&widths).map(|(gi, w)| gi * w).collect()))
        };
        if let Some((v, u)) = hill_climb(objective, scan[s].clone(), steps, 0.02) {
            if v > best.value {
                best = SampleMaximum {
                    value: v,
                    argmax: domain.from_unit(&u),
                };
            }
        }
    }
    Ok(best)
}

/// The finite set 𝓕 of max-value samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxValueSet {
    values: Vec<f64>,
    seed: u64,
    /// where each sample attained its maximum (empty for Gumbel draws)
    argmax_probes: Vec<Vec<f64>>,
}

impl MaxValueSet {
    pub fn new(values: Vec<f64>, seed: u64, argmax_probes: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("max-value set must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("max-value samples must be finite".into()));
        }
        Ok(Self {
            values,
            seed,
            argmax_probes,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn argmax_probes(&self) -> &[Vec<f64>] {
        &self.argmax_probes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `count` independent max-value draws, each from its own stream derived
/// from a seed taken from `rng`.
pub fn sample_max_values<R: Rng + ?Sized>(
    model: &PosteriorModel,
    domain: &Domain,
    count: usize,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<MaxValueSet> {
    if count == 0 {
        return Err(Error::InvalidInput("max-value count must be at least one".into()));
    }
    check_dim(domain.dim(), model.dim())?;
    let seed: u64 = rng.random();
    let mut values = Vec::with_capacity(count);
    let mut probes = Vec::with_capacity(count);
    for i in 0..count {
        let mut stream = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
        let sample = draw_posterior_function(model, config.feature_count, &mut stream)?;
        let max = maximize_function_sample(
            &sample,
            domain,
            config.restarts,
            config.steps,
            config.scan_points,
            &mut stream,
        )?;
        values.push(max.value);
        probes.push(max.argmax);
    }
    MaxValueSet::new(values, seed, probes)
}

/// Gumbel `P(f* ≤ z) = exp(−exp(−(z − location)/scale))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelFit {
    pub location: f64,
    pub scale: f64,
}

impl GumbelFit {
    pub fn mean(&self) -> f64 {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        self.location + EULER_GAMMA * self.scale
    }

    pub fn quantile(&self, q: f64) -> f64 {
        self.location - self.scale * (-q.ln()).ln()
    }
}

/// `ln Π_i Ψ((z − μ_i)/σ_i)`; points with σ_i = 0 act as steps at μ_i.
fn log_grid_cdf(z: f64, moments: &[(f64, f64)]) -> f64 {
    moments
        .iter()
        .map(|&(m, s)| {
            if s > 0.0 {
                log_std_cdf((z - m) / s)
            } else if z >= m {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

fn grid_quantile(q: f64, moments: &[(f64, f64)]) -> f64 {
    let target = q.ln();
    let top = moments.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
    let spread = moments.iter().map(|m| m.1).fold(0.0, f64::max).max(1e-12);
    let mut lo = top - spread;
    let mut step = spread;
    while log_grid_cdf(lo, moments) > target {
        lo -= step;
        step *= 2.0;
    }
    let mut hi = top + spread;
    step = spread;
    while log_grid_cdf(hi, moments) < target {
        hi += step;
        step *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_grid_cdf(mid, moments) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Fits a Gumbel to the distribution of the grid maximum by matching the
/// quartiles. `None` when every grid point has zero variance.
pub fn fit_gumbel(moments: &[(f64, f64)]) -> Option<GumbelFit> {
    if moments.iter().all(|m| m.1 <= 0.0) {
        return None;
    }
    let (q1, q3) = (0.25f64, 0.75f64);
    let z1 = grid_quantile(q1, moments);
    let z3 = grid_quantile(q3, moments);
    let scale = ((z3 - z1) / ((-q1.ln()).ln() - (-q3.ln()).ln())).max(1e-12);
    let location = z1 + scale * (-q1.ln()).ln();
    Some(GumbelFit { location, scale })
}

/// Max-value draws from a Gumbel approximation over a finite grid.
pub fn gumbel_sample_max_values<R: Rng + ?Sized>(
    model: &PosteriorModel,
    grid: &[Vec<f64>],
    count: usize,
    rng: &mut R,
) -> Result<MaxValueSet> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("Gumbel grid must be nonempty".into()));
    }
    if count == 0 {
        return Err(Error::InvalidInput("max-value count must be at least one".into()));
    }
    let moments: Vec<(f64, f64)> = grid
        .iter()
        .map(|x| model.predict(x).map(|s| (s.mean, s.latent_std())))
        .collect::<Result<_>>()?;
    let seed: u64 = rng.random();
    let mut stream = ChaCha8Rng::seed_from_u64(seed);
    let values = match fit_gumbel(&moments) {
        Some(fit) => (0..count)
            .map(|_| {
                let u: f64 = stream.random_range(f64::MIN_POSITIVE..1.0);
                fit.quantile(u)
            })
            .collect(),
        None => {
            let top = moments.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
            let tiny = 1e-9 * top.abs().max(1.0);
            (0..count)
                .map(|_| top + tiny * stream.random::<f64>())
                .collect()
        }
    };
    MaxValueSet::new(values, seed, Vec::new())
}
