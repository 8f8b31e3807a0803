//! Acquisition values: MES, the rectified (noisy-observation) max-value
//! density and its importance weight, the RMES Monte-Carlo estimator, and the
//! EI / UCB baselines.
//!
//! All acquisition values are computed together with their partial
//! derivatives with respect to the posterior mean μ_x and latent standard
//! deviation σ_x; [`ModelAcquisition`] chains these through the GP to obtain
//! input gradients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_stats::{gaussian_pdf, inverse_mills, log_gaussian_pdf, log_std_cdf, log_sum_exp_nonempty};
use crate::gp::{PosteriorModel, PredictiveStats};

/// Per-call inputs shared by all candidate points.
#[derive(Debug, Clone, Copy)]
pub struct AcqContext<'a> {
    /// The max-value sample set 𝓕.
    pub max_values: &'a [f64],
    /// Shared standard-normal draws ν.
    pub nu: &'a [f64],
    /// Best observed output, for EI.
    pub y_best: f64,
    pub ucb_beta: f64,
    /// Latent standard deviations at or below this are treated as zero.
    pub std_floor: f64,
}

/// Quantities entering the density of a noisy observation given f*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectifiedDensityParams {
    mean: f64,
    latent_variance: f64,
    noise_variance: f64,
    max_value: f64,
}

impl RectifiedDensityParams {
    /// Requires `σ_x² > 0` and `σ_n² > 0`; `max_value` may be `+∞`.
    pub fn new(mean: f64, latent_variance: f64, noise_variance: f64, max_value: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidInput(format!("mean {mean}")));
        }
        if !(latent_variance.is_finite() && latent_variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "latent variance must be positive, got {latent_variance}"
            )));
        }
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        if max_value.is_nan() || max_value == f64::NEG_INFINITY {
            return Err(Error::InvalidInput(format!("max value {max_value}")));
        }
        Ok(Self {
            mean,
            latent_variance,
            noise_variance,
            max_value,
        })
    }

    pub fn from_stats(stats: &PredictiveStats, max_value: f64) -> Result<Self> {
        Self::new(stats.mean, stats.latent_variance, stats.noise_variance(), max_value)
    }

    /// σ_+² = σ_x² + σ_n²
    pub fn observation_variance(&self) -> f64 {
        self.latent_variance + self.noise_variance
    }

    /// h = (f* − μ_x) / σ_x
    pub fn h(&self) -> f64 {
        (self.max_value - self.mean) / self.latent_variance.sqrt()
    }

    /// g(y) = (σ_+² f* − σ_n² μ_x − σ_x² y) / (σ_x σ_n σ_+)
    pub fn g(&self, y: f64) -> f64 {
        let s2 = self.observation_variance();
        let num = s2 * self.max_value - self.noise_variance * self.mean - self.latent_variance * y;
        num / (self.latent_variance.sqrt() * self.noise_variance.sqrt() * s2.sqrt())
    }

    pub fn log_weight(&self, y: f64) -> f64 {
        log_std_cdf(self.g(y)) - log_std_cdf(self.h())
    }

    pub fn log_density(&self, y: f64) -> f64 {
        log_gaussian_pdf(y, self.mean, self.observation_variance()) + self.log_weight(y)
    }
}

/// Importance weight `Ψ(g(y)) / Ψ(h)` turning `𝓝(μ_x, σ_+²)` into the
/// max-value-conditioned observation density.
pub fn weight(params: &RectifiedDensityParams, y: f64) -> f64 {
    params.log_weight(y).exp()
}

/// Density of a noisy observation `y` given the max-value:
/// `𝓝(y; μ_x, σ_+²) · Ψ(g(y)) / Ψ(h)`.
pub fn cond_density(params: &RectifiedDensityParams, y: f64) -> f64 {
    let base = gaussian_pdf(y, params.mean, params.observation_variance());
    let w = weight(params, y);
    let direct = base * w;
    if direct.is_finite() && (direct > 0.0 || base == 0.0 && w.is_finite()) {
        direct
    } else {
        // 0·∞ or overflow: fall back to log space
        params.log_density(y).exp()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Partials {
    value: f64,
    d_mean: f64,
    d_std: f64,
}

/// MES term for one standardized bound and its derivative in h.
fn mes_term(h: f64) -> (f64, f64) {
    if h == f64::INFINITY {
        return (0.0, 0.0);
    }
    let lambda = inverse_mills(h);
    let value = 0.5 * h * lambda - log_std_cdf(h);
    let slope = -0.5 * lambda - 0.5 * h * lambda * (h + lambda);
    (value, slope)
}

fn mes_partials(mean: f64, std: f64, max_values: &[f64], floor: f64) -> Partials {
    if std <= floor || std == 0.0 || max_values.is_empty() {
        return Partials::default();
    }
    let mut acc = Partials::default();
    for &f in max_values {
        let h = (f - mean) / std;
        let (v, dv_dh) = mes_term(h);
        acc.value += v;
        if h.is_finite() {
            acc.d_mean += dv_dh * (-1.0 / std);
            acc.d_std += dv_dh * (-h / std);
        }
    }
    let k = max_values.len() as f64;
    Partials {
        value: (acc.value / k).max(0.0),
        d_mean: acc.d_mean / k,
        d_std: acc.d_std / k,
    }
}

/// Max-value entropy search on the noiseless output, in nats.
pub fn mes_value(stats: &PredictiveStats, max_values: &[f64]) -> f64 {
    mes_partials(stats.mean, stats.latent_std(), max_values, 0.0).value
}

struct MaxValueTerm {
    h: f64,
    log_cdf_h: f64,
    mills_h: f64,
}

/// Monte-Carlo RMES with shared ν and, optionally, its μ/σ_x derivatives.
fn rmes_partials(mean: f64, std: f64, noise_variance: f64, ctx: &AcqContext<'_>, with_grad: bool) -> Partials {
    if std <= ctx.std_floor || std == 0.0 || ctx.max_values.len() < 2 || ctx.nu.is_empty() {
        return Partials::default();
    }
    let noise_std = noise_variance.sqrt().max(ctx.std_floor).max(1e-8 * std);
    let obs_std = (std * std + noise_std * noise_std).sqrt();
    // g = (σ_+/σ_n) h − (σ_x/σ_n) ν
    let ratio = obs_std / noise_std;
    let slope = std / noise_std;
    let d_ratio_d_std = std / (obs_std * noise_std);

    let terms: Vec<MaxValueTerm> = ctx
        .max_values
        .iter()
        .map(|&f| {
            let h = (f - mean) / std;
            MaxValueTerm {
                h,
                log_cdf_h: log_std_cdf(h),
                mills_h: inverse_mills(h),
            }
        })
        .collect();
    let k = terms.len();
    let ln_k = (k as f64).ln();

    let mut log_w = vec![0.0; k];
    let mut da_mean = vec![0.0; k];
    let mut da_std = vec![0.0; k];
    let mut total = Partials::default();

    for &nu in ctx.nu {
        for (j, t) in terms.iter().enumerate() {
            let g = if t.h.is_finite() {
                ratio * t.h - slope * nu
            } else {
                t.h
            };
            log_w[j] = log_std_cdf(g) - t.log_cdf_h;
            if with_grad && t.h.is_finite() {
                let mills_g = inverse_mills(g);
                let dh_mean = -1.0 / std;
                let dh_std = -t.h / std;
                let dg_mean = ratio * dh_mean;
                let dg_std = d_ratio_d_std * t.h + ratio * dh_std - nu / noise_std;
                da_mean[j] = mills_g * dg_mean - t.mills_h * dh_mean;
                da_std[j] = mills_g * dg_std - t.mills_h * dh_std;
            } else {
                da_mean[j] = 0.0;
                da_std[j] = 0.0;
            }
        }
        let lse = log_sum_exp_nonempty(&log_w);
        if lse == f64::NEG_INFINITY {
            continue;
        }
        let (mut dl_mean, mut dl_std) = (0.0, 0.0);
        if with_grad {
            for j in 0..k {
                let soft = (log_w[j] - lse).exp();
                dl_mean += soft * da_mean[j];
                dl_std += soft * da_std[j];
            }
        }
        for j in 0..k {
            if log_w[j] == f64::NEG_INFINITY {
                continue;
            }
            let w = log_w[j].exp();
            let log_ratio = log_w[j] - lse + ln_k;
            total.value += w * log_ratio;
            if with_grad {
                total.d_mean += w * (da_mean[j] * (log_ratio + 1.0) - dl_mean);
                total.d_std += w * (da_std[j] * (log_ratio + 1.0) - dl_std);
            }
        }
    }
    let scale = 1.0 / (k as f64 * ctx.nu.len() as f64);
    Partials {
        value: total.value * scale,
        d_mean: total.d_mean * scale,
        d_std: total.d_std * scale,
    }
}

/// Rectified max-value entropy search: mutual information between the noisy
/// observation and f* under the finite max-value set, estimated with the
/// shared ν block (common random numbers). Deterministic given `ctx`.
pub fn rmes_value(stats: &PredictiveStats, ctx: &AcqContext<'_>) -> f64 {
    rmes_partials(stats.mean, stats.latent_std(), stats.noise_variance(), ctx, false).value
}

fn ei_partials(mean: f64, std: f64, y_best: f64, floor: f64) -> Partials {
    let diff = mean - y_best;
    if std <= floor || std == 0.0 {
        return Partials {
            value: diff.max(0.0),
            d_mean: if diff > 0.0 { 1.0 } else { 0.0 },
            d_std: 0.0,
        };
    }
    let z = diff / std;
    let cdf = crate::gaussian_stats::std_cdf(z);
    let pdf = crate::gaussian_stats::std_pdf(z);
    Partials {
        value: (diff * cdf + std * pdf).max(0.0),
        d_mean: cdf,
        d_std: pdf,
    }
}

/// Expected improvement over the best observed output.
pub fn ei_value(stats: &PredictiveStats, y_best: f64) -> f64 {
    ei_partials(stats.mean, stats.latent_std(), y_best, 0.0).value
}

/// `μ_x + β σ_x`
pub fn ucb_value(stats: &PredictiveStats, beta: f64) -> f64 {
    stats.mean + beta * stats.latent_std()
}

/// The acquisition functions offered by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Rmes,
    Mes,
    Ei,
    Ucb,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 4] = [Self::Rmes, Self::Mes, Self::Ei, Self::Ucb];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rmes => "rmes",
            Self::Mes => "mes",
            Self::Ei => "ei",
            Self::Ucb => "ucb",
        }
    }

    /// Whether the acquisition conditions on a max-value set.
    pub fn needs_max_values(self) -> bool {
        matches!(self, Self::Rmes | Self::Mes)
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rmes" => Ok(Self::Rmes),
            "mes" => Ok(Self::Mes),
            "ei" => Ok(Self::Ei),
            "ucb" => Ok(Self::Ucb),
            other => Err(Error::InvalidInput(format!("unknown acquisition `{other}`"))),
        }
    }
}

/// Something the acquisition optimizer can maximize. `nu` is the shared
/// standard-normal block; deterministic acquisitions ignore it.
pub trait Acquisition: Sync {
    fn name(&self) -> &str;

    fn value(&self, x: &[f64], nu: &[f64]) -> Result<f64>;

    fn value_and_gradient(&self, x: &[f64], nu: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// An acquisition evaluated on a fitted GP posterior.
#[derive(Debug, Clone)]
pub struct ModelAcquisition<'m> {
    model: &'m PosteriorModel,
    kind: AcquisitionKind,
    max_values: Vec<f64>,
    y_best: f64,
    ucb_beta: f64,
    std_floor: f64,
}

/// UCB exploration weight used unless configured otherwise.
pub const DEFAULT_UCB_BETA: f64 = 3.0;

impl<'m> ModelAcquisition<'m> {
    pub fn new(model: &'m PosteriorModel, kind: AcquisitionKind, max_values: Vec<f64>) -> Result<Self> {
        if kind.needs_max_values() && max_values.is_empty() {
            return Err(Error::InvalidInput(format!("{kind} needs at least one max-value sample")));
        }
        let y_best = model
            .dataset()
            .outputs()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            model,
            kind,
            max_values,
            y_best: if y_best.is_finite() { y_best } else { 0.0 },
            ucb_beta: DEFAULT_UCB_BETA,
            std_floor: 1e-8 * model.hyperparams().signal_variance.sqrt(),
        })
    }

    pub fn with_ucb_beta(mut self, beta: f64) -> Self {
        self.ucb_beta = beta;
        self
    }

    pub fn with_y_best(mut self, y_best: f64) -> Self {
        self.y_best = y_best;
        self
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }

    pub fn context<'a>(&'a self, nu: &'a [f64]) -> AcqContext<'a> {
        AcqContext {
            max_values: &self.max_values,
            nu,
            y_best: self.y_best,
            ucb_beta: self.ucb_beta,
            std_floor: self.std_floor,
        }
    }

    fn partials(&self, stats: &PredictiveStats, nu: &[f64], with_grad: bool) -> Partials {
        let std = stats.latent_std();
        match self.kind {
            AcquisitionKind::Rmes => {
                rmes_partials(stats.mean, std, stats.noise_variance(), &self.context(nu), with_grad)
            }
            AcquisitionKind::Mes => mes_partials(stats.mean, std, &self.max_values, self.std_floor),
            AcquisitionKind::Ei => ei_partials(stats.mean, std, self.y_best, self.std_floor),
            AcquisitionKind::Ucb => Partials {
                value: stats.mean + self.ucb_beta * std,
                d_mean: 1.0,
                d_std: self.ucb_beta,
            },
        }
    }
}

impl Acquisition for ModelAcquisition<'_> {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn value(&self, x: &[f64], nu: &[f64]) -> Result<f64> {
        let stats = self.model.predict(x)?;
        Ok(self.partials(&stats, nu, false).value)
    }

    fn value_and_gradient(&self, x: &[f64], nu: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (stats, grad) = self.model.predict_with_gradient(x)?;
        let p = self.partials(&stats, nu, true);
        let std = stats.latent_std();
        // ∂σ_x/∂x = (∂σ_x²/∂x) / (2σ_x)
        let std_scale = if std > self.std_floor && std > 0.0 {
            0.5 / std
        } else {
            0.0
        };
        let g = grad
            .mean
            .iter()
            .zip(&grad.latent_variance)
            .map(|(dm, dv)| p.d_mean * dm + p.d_std * std_scale * dv)
            .collect();
        Ok((p.value, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_stats::{std_pdf, UpperTruncatedGaussian};
    use crate::verify::{finite_difference_gradient, integrate, quadrature_expected_improvement, NoisyMaxSetting};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn stats(mean: f64, latent: f64, noise: f64) -> PredictiveStats {
        PredictiveStats::new(mean, latent, noise)
    }

    fn nu_block(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn mes_at_zero_bound_is_ln_two() {
        // h ψ(h) / (2Ψ(h)) vanishes at h = 0, leaving −ln Ψ(0).
        let v = mes_value(&stats(0.0, 1.0, 0.0), &[0.0]);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn mes_limits() {
        assert_eq!(mes_value(&stats(0.0, 1.0, 0.0), &[f64::INFINITY]), 0.0);
        assert!(mes_value(&stats(0.0, 1.0, 0.0), &[60.0]) < 1e-300);
        assert_eq!(mes_value(&stats(0.0, 0.0, 0.1), &[0.5]), 0.0);
    }

    #[test]
    fn mes_is_entropy_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let mu: f64 = rng.random_range(-3.0..3.0);
            let sd: f64 = rng.random_range(0.05..4.0);
            let f: f64 = mu + sd * rng.random_range(-6.0..6.0);
            let gauss = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sd * sd).ln();
            let trunc = UpperTruncatedGaussian::new(mu, sd, f).unwrap().entropy();
            let v = mes_value(&stats(mu, sd * sd, 0.0), &[f]);
            assert!((v - (gauss - trunc)).abs() < 1e-12, "{v} vs {}", gauss - trunc);
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn weight_and_density_limits() {
        let p = RectifiedDensityParams::new(0.3, 1.2, 0.4, f64::INFINITY).unwrap();
        for y in [-4.0, 0.0, 2.0] {
            assert_eq!(weight(&p, y), 1.0);
            let want = gaussian_pdf(y, 0.3, 1.6);
            assert!(((cond_density(&p, y) - want) / want).abs() < 1e-15);
        }
        let p = RectifiedDensityParams::new(0.0, 1.0, 0.5, -0.7).unwrap();
        let limit = 1.0 / crate::gaussian_stats::std_cdf(p.h());
        assert!(((weight(&p, -1e4) - limit) / limit).abs() < 1e-12);
        assert!(RectifiedDensityParams::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(RectifiedDensityParams::new(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn density_factorizes_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p = RectifiedDensityParams::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(0.01..4.0),
                rng.random_range(0.01..2.0),
                rng.random_range(-3.0..3.0),
            )
            .unwrap();
            let y: f64 = rng.random_range(-6.0..6.0);
            let prod = gaussian_pdf(y, p.mean, p.observation_variance()) * weight(&p, y);
            let d = cond_density(&p, y);
            assert!((d - prod).abs() <= 1e-14 * prod.abs(), "{d} vs {prod}");
        }
    }

    #[test]
    fn density_never_nan_in_deep_tail() {
        let p = RectifiedDensityParams::new(0.0, 1.0, 1e-4, -45.0).unwrap();
        for y in [-1e3, -45.0, -44.9, 0.0, 10.0] {
            let d = cond_density(&p, y);
            assert!(d.is_finite() && d >= 0.0, "y={y}: {d}");
        }
    }

    #[test]
    fn density_matches_convolution_in_the_reference_configuration() {
        let p = RectifiedDensityParams::new(0.0, 4.0, 1.0, 0.5).unwrap();
        let setting = NoisyMaxSetting {
            mean: 0.0,
            latent_variance: 4.0,
            noise_variance: 1.0,
            max_value: 0.5,
        };
        let got = cond_density(&p, 0.0);
        let want = setting.convolution_density(0.0);
        assert!((got - want).abs() < 1e-8);
    }

    #[test]
    fn rmes_with_single_max_value_is_zero() {
        let nu = nu_block(64, 3);
        let ctx = AcqContext {
            max_values: &[0.8],
            nu: &nu,
            y_best: 0.0,
            ucb_beta: 3.0,
            std_floor: 0.0,
        };
        assert_eq!(rmes_value(&stats(0.1, 0.5, 0.2), &ctx), 0.0);
        let one = [0.3];
        let ctx = AcqContext { nu: &one, ..ctx };
        assert_eq!(rmes_value(&stats(0.1, 0.5, 0.2), &ctx), 0.0);
    }

    #[test]
    fn rmes_vanishes_without_latent_uncertainty() {
        let nu = nu_block(4096, 4);
        let ctx = AcqContext {
            max_values: &[0.5, 1.0, 2.0],
            nu: &nu,
            y_best: 0.0,
            ucb_beta: 3.0,
            std_floor: 1e-8,
        };
        assert!(rmes_value(&stats(0.0, 1e-12, 1.0), &ctx).abs() < 1e-6);
        assert_eq!(rmes_value(&stats(0.0, 1e-18, 1.0), &ctx), 0.0);
    }

    #[test]
    fn rmes_matches_mixture_quadrature() {
        let nu = nu_block(100_000, 5);
        let settings: Vec<NoisyMaxSetting> = [0.4, 1.1, 2.0]
            .iter()
            .map(|&f| NoisyMaxSetting {
                mean: 0.2,
                latent_variance: 0.8,
                noise_variance: 0.1,
                max_value: f,
            })
            .collect();
        let ctx = AcqContext {
            max_values: &[0.4, 1.1, 2.0],
            nu: &nu,
            y_best: 0.0,
            ucb_beta: 3.0,
            std_floor: 0.0,
        };
        let mc = rmes_value(&stats(0.2, 0.8, 0.1), &ctx);
        let exact = crate::verify::finite_set_mutual_information(&settings);
        assert!((mc - exact).abs() < 1e-2, "{mc} vs {exact}");
    }

    #[test]
    fn rmes_below_mes_at_matched_max_values() {
        // Noise can only destroy information about f*.
        let nu = nu_block(20_000, 8);
        let fs = [0.6, 1.0, 1.7];
        let ctx = AcqContext {
            max_values: &fs,
            nu: &nu,
            y_best: 0.0,
            ucb_beta: 3.0,
            std_floor: 0.0,
        };
        let s = stats(0.0, 1.0, 0.3);
        assert!(rmes_value(&s, &ctx) < mes_value(&s, &fs));
    }

    #[test]
    fn rmes_partials_match_finite_differences() {
        let nu = nu_block(256, 6);
        let fs = [0.4, 0.9, 1.6, 2.2];
        let ctx = AcqContext {
            max_values: &fs,
            nu: &nu,
            y_best: 0.0,
            ucb_beta: 3.0,
            std_floor: 0.0,
        };
        let f = |v: &[f64]| rmes_partials(v[0], v[1], 0.05, &ctx, false).value;
        let x = [0.3, 0.7];
        let p = rmes_partials(x[0], x[1], 0.05, &ctx, true);
        let fd = finite_difference_gradient(f, &x, 1e-6);
        assert!((p.d_mean - fd[0]).abs() < 1e-6 * fd[0].abs().max(1.0));
        assert!((p.d_std - fd[1]).abs() < 1e-6 * fd[1].abs().max(1.0));
    }

    #[test]
    fn ei_examples() {
        assert_eq!(ei_value(&stats(0.2, 0.0, 0.0), 0.5), 0.0);
        assert_eq!(ei_value(&stats(0.7, 0.0, 0.0), 0.5), 0.7 - 0.5);
        assert!((ei_value(&stats(1.0, 1.0, 0.0), 1.0) - std_pdf(0.0)).abs() < 1e-15);
        for (m, s, b) in [(0.0, 1.0, 0.5), (2.0, 0.3, 1.0), (-1.0, 2.0, 1.5)] {
            let q = quadrature_expected_improvement(m, s, b);
            assert!((ei_value(&stats(m, s * s, 0.0), b) - q).abs() < 1e-10);
        }
    }

    #[test]
    fn ei_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (m, s, b) = (0.3, 1.4, 0.9);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                (m + s * z - b).max(0.0)
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((ei_value(&stats(m, s * s, 0.0), b) - mean).abs() < 3.0 * se);
    }

    #[test]
    fn ucb_examples() {
        assert_eq!(ucb_value(&stats(0.4, 9.0, 0.1), 0.0), 0.4);
        assert_eq!(ucb_value(&stats(1.0, 4.0, 0.1), 3.0), 7.0);
        assert!(ucb_value(&stats(1.0, 4.1, 0.1), 3.0) > 7.0);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("RMES".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::Rmes);
        assert_eq!(" ucb".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::Ucb);
        assert!("pes".parse::<AcquisitionKind>().is_err());
    }

    #[test]
    fn weight_has_unit_expectation() {
        let p = RectifiedDensityParams::new(0.5, 2.0, 0.3, 0.1).unwrap();
        let sp = p.observation_variance().sqrt();
        let e = integrate(|v| std_pdf(v) * weight(&p, 0.5 + sp * v), -12.0, 12.0, &[], 64, 1e-13);
        assert!((e - 1.0).abs() < 1e-9);
    }
}
