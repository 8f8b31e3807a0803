//! Acquisition-level properties checked against quadrature oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmes_core::acquisition::cond_density;
use rmes_core::gaussian_stats::{trunc_gauss_entropy, UpperTruncatedGaussian};
use rmes_core::verify::{finite_set_entropy_difference, finite_set_mutual_information, quadrature_entropy, NoisyMaxSetting};
use rmes_core::*;

/// As σ_n² → 0 the entropy of y | f* approaches that of the truncated latent,
/// from above and monotonically.
#[test]
fn noiseless_limit_approaches_the_truncated_entropy() {
    let (mean, latent_variance, max_value) = (0.2, 1.5f64, 1.1);
    let target = trunc_gauss_entropy(&UpperTruncatedGaussian::new(mean, latent_variance.sqrt(), max_value).unwrap());
    let mut last_gap = f64::INFINITY;
    for noise_variance in [1e-2, 1e-4, 1e-6] {
        let s = NoisyMaxSetting {
            mean,
            latent_variance,
            noise_variance,
            max_value,
        };
        let p = RectifiedDensityParams::new(mean, latent_variance, noise_variance, max_value).unwrap();
        let (lo, hi) = s.y_range();
        let h = quadrature_entropy(|y| cond_density(&p, y), lo, hi, &s.breakpoints(), 1e-12);
        let gap = h - target;
        assert!(gap > 0.0, "σ_n² = {noise_variance}: gap {gap}");
        assert!(gap < last_gap, "σ_n² = {noise_variance}: gap {gap} after {last_gap}");
        last_gap = gap;
    }
    assert!(last_gap < 1e-2, "final gap {last_gap}");
}

/// H(p̄) − mean H(p(·|f*)) equals the single-integral mutual information.
#[test]
fn two_term_and_single_expression_oracles_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let mean = rng.random_range(-1.0..1.0);
        let latent_variance = rng.random_range(0.05..3.0);
        let noise_variance = rng.random_range(0.01..1.0);
        let settings: Vec<NoisyMaxSetting> = (0..3)
            .map(|_| NoisyMaxSetting {
                mean,
                latent_variance,
                noise_variance,
                max_value: mean + rng.random_range(-0.5..2.5),
            })
            .collect();
        let a = finite_set_mutual_information(&settings);
        let b = finite_set_entropy_difference(&settings);
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        assert!(a >= 0.0);
    }
}

/// The RMES estimate is a Monte-Carlo estimate of a mutual information, so
/// it may dip below zero only by sampling error.
#[test]
fn rmes_is_nonnegative_up_to_monte_carlo_error() {
    const BATCHES: usize = 20;
    let nu = NuBlock::from_seed(100_000, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let stats = PredictiveStats::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(1e-3..4.0),
            rng.random_range(1e-4..2.0),
        );
        let fs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..3.0)).collect();
        let ctx = |nu: &'_ [f64]| rmes_value(
            &stats,
            &AcqContext {
                max_values: &fs,
                nu,
                y_best: 0.0,
                ucb_beta: 0.0,
                std_floor: 0.0,
            },
        );
        let full = ctx(nu.samples());
        let batch: Vec<f64> = nu.samples().chunks(nu.len() / BATCHES).map(ctx).collect();
        let m = batch.iter().sum::<f64>() / BATCHES as f64;
        let sd = (batch.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64).sqrt();
        let se = sd / (BATCHES as f64).sqrt();
        assert!(full >= -3.0 * se, "RMES {full} below −3 SE ({se}) at {stats:?}, F = {fs:?}");
    }
}
