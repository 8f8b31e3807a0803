//! Conformance suite: production numerics against independent oracles
//! (adaptive quadrature, dense matrix inverses, finite differences).
//!
//! Each check returns a [`CheckOutcome`] rather than panicking, so the same
//! code backs the `check` subcommand and the acceptance tests.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmes_core::acquisition::{cond_density, weight, RectifiedDensityParams};
use rmes_core::gaussian_stats::{UpperTruncatedGaussian, HALF_LN_2PI};
use rmes_core::verify::{
    dense_log_marginal_likelihood, dense_posterior, finite_difference_gradient, finite_set_mutual_information,
    integrate, quadrature_entropy, NoisyMaxSetting,
};
use rmes_core::{
    draw_nu_block, log_marginal_likelihood, mes_value, rmes_value, sample_max_values, AcqContext, Acquisition,
    AcquisitionKind, Dataset, Domain, KernelHyperparams, ModelAcquisition, PosteriorModel, PredictiveStats,
    SamplerConfig,
};

/// Result of one conformance check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} [{}] {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: &'static str, name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        id,
        name,
        passed,
        detail,
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// 50 parameterizations of `y | f*`; the first three have h = −6, 0, 6
/// exactly, the rest draw h uniformly from [−6, 6].
pub fn density_parameterizations() -> Vec<NoisyMaxSetting> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..50)
        .map(|i| {
            let mean = rng.random_range(-3.0..3.0);
            let latent_variance = log_uniform(&mut rng, 1e-2, 1e1);
            let noise_variance = log_uniform(&mut rng, 1e-4, 1e1);
            let h = match i {
                0 => -6.0,
                1 => 0.0,
                2 => 6.0,
                _ => rng.random_range(-6.0..6.0),
            };
            NoisyMaxSetting {
                mean,
                latent_variance,
                noise_variance,
                max_value: mean + h * latent_variance.sqrt(),
            }
        })
        .collect()
}

fn params(s: &NoisyMaxSetting) -> RectifiedDensityParams {
    RectifiedDensityParams::new(s.mean, s.latent_variance, s.noise_variance, s.max_value)
        .expect("generated parameters are valid")
}

/// ∫ p(y | f*) dy = 1.
pub fn density_normalization() -> CheckOutcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for s in density_parameterizations() {
        let p = params(&s);
        let (lo, hi) = s.y_range();
        let mass = integrate(|y| cond_density(&p, y), lo, hi, &s.breakpoints(), 32, 1e-12);
        worst = worst.max((mass - 1.0).abs());
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        "1",
        "conditional density integrates to one",
        worst < 1e-6 && secs < 10.0,
        format!("50 parameterizations, max |∫p − 1| = {worst:.2e}, {secs:.2} s"),
    )
}

/// Closed form against the truncated-Gaussian ⊛ noise convolution at the
/// reference configuration μ = 0, σ_x² = 4, σ_n² = 1, f* = 0.5.
pub fn density_matches_convolution() -> CheckOutcome {
    let s = NoisyMaxSetting {
        mean: 0.0,
        latent_variance: 4.0,
        noise_variance: 1.0,
        max_value: 0.5,
    };
    let p = params(&s);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let y = -8.0 + 11.0 * i as f64 / 19.0;
        worst = worst.max((cond_density(&p, y) - s.convolution_density(y)).abs());
    }
    outcome(
        "2",
        "conditional density matches convolution quadrature",
        worst < 1e-8,
        format!("20 points on [−8, 3], max abs error {worst:.2e}"),
    )
}

/// E[w] = ∫ 𝓝(y; μ, σ₊²) w(y) dy = 1.
pub fn weight_normalization() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for s in density_parameterizations() {
        let p = params(&s);
        let (lo, hi) = s.y_range();
        let var = s.latent_variance + s.noise_variance;
        let mass = integrate(
            |y| rmes_core::gaussian_stats::gaussian_pdf(y, s.mean, var) * weight(&p, y),
            lo,
            hi,
            &s.breakpoints(),
            32,
            1e-12,
        );
        worst = worst.max((mass - 1.0).abs());
    }
    outcome(
        "3",
        "importance weight has unit expectation",
        worst < 1e-6,
        format!("50 parameterizations, max |E[w] − 1| = {worst:.2e}"),
    )
}

/// MES per sample = H(𝓝) − H(truncated), and the truncated entropy agrees
/// with −∫ p log p.
pub fn mes_closed_form() -> CheckOutcome {
    let mut worst_identity: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    for s in density_parameterizations() {
        let sd = s.latent_variance.sqrt();
        let stats = PredictiveStats::new(s.mean, s.latent_variance, s.noise_variance);
        let tg = UpperTruncatedGaussian::new(s.mean, sd, s.max_value).expect("valid");
        let gaussian_entropy = HALF_LN_2PI + 0.5 + sd.ln();
        let mes = mes_value(&stats, &[s.max_value]);
        worst_identity = worst_identity.max((mes - (gaussian_entropy - tg.entropy())).abs());

        let lo = s.mean.min(s.max_value) - 12.0 * sd;
        let hz = (s.max_value - s.mean) / sd;
        // below the mean the truncated density decays on the scale σ/|h|
        let bps = [s.mean, s.max_value - sd / hz.abs().max(1.0), s.max_value - 0.1 * sd];
        let quad = quadrature_entropy(|y| tg.pdf(y), lo, s.max_value, &bps, 1e-13);
        worst_quad = worst_quad.max((quad - tg.entropy()).abs());
    }
    outcome(
        "4",
        "MES closed form and truncated-Gaussian entropy",
        worst_identity < 1e-12 && worst_quad < 1e-7,
        format!("identity max err {worst_identity:.2e}, entropy vs quadrature max err {worst_quad:.2e}"),
    )
}

fn random_model_1d(rng: &mut ChaCha8Rng, n: usize) -> PosteriorModel {
    let lengthscale = rng.random_range(0.1..0.4);
    let noise_variance = log_uniform(rng, 1e-3, 0.3);
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let phase = rng.random_range(0.0..6.0);
    let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0] + phase).sin() + 0.1 * rng.random::<f64>()).collect();
    PosteriorModel::fit(
        Dataset::new(x, y).expect("valid data"),
        KernelHyperparams::isotropic(1, lengthscale, 1.0, noise_variance).expect("valid"),
    )
    .expect("well-posed model")
}

/// RMES with three max-values and 10⁵ shared ν against the mixture MI by
/// quadrature, on 20 random 1-D GP instances.
pub fn rmes_oracle_equivalence() -> CheckOutcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let nu = draw_nu_block(100_000, &mut rng).expect("positive count");
    let domain = Domain::unit(1).expect("valid");
    let sampler = SamplerConfig {
        feature_count: 512,
        restarts: 5,
        steps: 100,
        scan_points: 200,
    };
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    for i in 0..20 {
        let model = random_model_1d(&mut rng, 4);
        let fs = sample_max_values(&model, &domain, 3, &sampler, &mut rng).expect("sampling succeeds");
        let x = [rng.random::<f64>()];
        let stats = model.predict(&x).expect("prediction");
        let ctx = AcqContext {
            max_values: fs.values(),
            nu: nu.samples(),
            y_best: 0.0,
            ucb_beta: 0.0,
            std_floor: 0.0,
        };
        let mc = rmes_value(&stats, &ctx);
        let settings: Vec<NoisyMaxSetting> = fs
            .values()
            .iter()
            .map(|&f| NoisyMaxSetting {
                mean: stats.mean,
                latent_variance: stats.latent_variance,
                noise_variance: stats.noise_variance(),
                max_value: f,
            })
            .collect();
        let exact = finite_set_mutual_information(&settings);
        let err = (mc - exact).abs();
        if err > worst {
            worst = err;
            worst_case = format!("instance {i}: estimate {mc:.5}, quadrature {exact:.5}");
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        "5",
        "RMES estimator matches mixture mutual information",
        worst < 1e-2 && secs < 60.0,
        format!("20 instances, max abs error {worst:.2e} ({worst_case}), {secs:.2} s"),
    )
}

/// |𝓕| = 1 gives exactly zero; vanishing latent variance gives ~zero.
pub fn rmes_degeneracies() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let nu = draw_nu_block(10_000, &mut rng).expect("positive count");
    let ctx = |fs: &'static [f64]| AcqContext {
        max_values: fs,
        nu: nu.samples(),
        y_best: 0.0,
        ucb_beta: 0.0,
        std_floor: 0.0,
    };
    let single = [0.0, -3.0, 2.5]
        .iter()
        .flat_map(|m| [1e-3, 1.0, 10.0].map(|v| rmes_value(&PredictiveStats::new(*m, v, 0.1), &ctx(&[1.0]))))
        .collect::<Vec<_>>();
    let tiny = [1e-12, 1e-14, 0.0]
        .iter()
        .map(|v| rmes_value(&PredictiveStats::new(0.3, *v, 0.05), &ctx(&[0.5, 1.0, 2.0])).abs())
        .fold(0.0, f64::max);
    let exact_zero = single.iter().all(|v| *v == 0.0);
    outcome(
        "6",
        "RMES degeneracies",
        exact_zero && tiny < 1e-6,
        format!("|F| = 1 exactly zero: {exact_zero}; max |RMES| at σ_x² ≤ 1e-12: {tiny:.2e}"),
    )
}

fn random_model_2d(rng: &mut ChaCha8Rng) -> (PosteriorModel, Domain) {
    let domain = Domain::new(vec![-1.0, 0.0], vec![2.0, 4.0]).expect("valid");
    let n = rng.random_range(3..12);
    let x: Vec<Vec<f64>> = (0..n).map(|_| domain.sample_uniform(rng)).collect();
    let y: Vec<f64> = x.iter().map(|v| (v[0] * 2.0).sin() + 0.3 * v[1] + 0.05 * rng.random::<f64>()).collect();
    let hyper = KernelHyperparams::new(
        vec![rng.random_range(0.3..1.5), rng.random_range(0.5..3.0)],
        rng.random_range(0.5..2.0),
        log_uniform(rng, 1e-4, 0.1),
    )
    .expect("valid");
    (
        PosteriorModel::fit(Dataset::new(x, y).expect("valid"), hyper).expect("well-posed"),
        domain,
    )
}

/// Analytic gradients of all four acquisitions against central differences
/// under a common ν block.
pub fn gradient_checks() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst = [0.0f64; 4];
    for (k, kind) in AcquisitionKind::ALL.iter().enumerate() {
        for _ in 0..20 {
            let (model, domain) = random_model_2d(&mut rng);
            let top = model.dataset().outputs().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let fs: Vec<f64> = (0..4).map(|_| top + rng.random_range(0.05..1.5)).collect();
            let acq = ModelAcquisition::new(&model, *kind, fs).expect("valid");
            let nu = draw_nu_block(64, &mut rng).expect("positive count");
            let x = domain.sample_uniform(&mut rng);
            let (_, g) = acq.value_and_gradient(&x, nu.samples()).expect("finite");
            let fd = finite_difference_gradient(|p| acq.value(p, nu.samples()).expect("finite"), &x, 1e-6);
            let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
            worst[k] = worst[k].max(err);
        }
    }
    let passed = worst.iter().all(|w| *w < 1e-3);
    let detail = AcquisitionKind::ALL
        .iter()
        .zip(worst)
        .map(|(k, w)| format!("{k} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        "7",
        "acquisition gradients match finite differences",
        passed,
        format!("20 instances each, max relative error: {detail}"),
    )
}

/// Cholesky posterior and marginal likelihood against dense inverses.
pub fn gp_core_oracles() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_post: f64 = 0.0;
    let mut worst_lml: f64 = 0.0;
    for n in [1usize, 2, 5, 12, 25, 50] {
        for _ in 0..3 {
            let d = rng.random_range(1..4);
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let data = Dataset::new(x, y).expect("valid");
            let hyper = KernelHyperparams::new(
                (0..d).map(|_| rng.random_range(0.1..0.6)).collect(),
                rng.random_range(0.5..3.0),
                log_uniform(&mut rng, 1e-3, 0.5),
            )
            .expect("valid");
            let model = PosteriorModel::fit(data.clone(), hyper.clone()).expect("well-posed");
            for _ in 0..10 {
                let q: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let s = model.predict(&q).expect("prediction");
                let (m, v) = dense_posterior(&data, &hyper, model.jitter(), &q);
                worst_post = worst_post.max((s.mean - m).abs() / m.abs().max(1.0));
                worst_post = worst_post.max((s.latent_variance - v).abs() / v.abs().max(hyper.signal_variance));
            }
            let lml = log_marginal_likelihood(&data, &hyper).expect("finite");
            let dense = dense_log_marginal_likelihood(&data, &hyper, model.jitter());
            worst_lml = worst_lml.max((lml - dense).abs() / dense.abs().max(1.0));
        }
    }
    outcome(
        "8",
        "GP posterior and marginal likelihood match dense oracles",
        worst_post < 1e-9 && worst_lml < 1e-9,
        format!("n ≤ 50: posterior max rel err {worst_post:.2e}, LML max rel err {worst_lml:.2e}"),
    )
}

/// Criteria 1–8, in order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        density_normalization(),
        density_matches_convolution(),
        weight_normalization(),
        mes_closed_form(),
        rmes_oracle_equivalence(),
        rmes_degeneracies(),
        gradient_checks(),
        gp_core_oracles(),
    ]
}
