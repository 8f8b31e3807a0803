//! Invariants that must hold for any parameters, checked with proptest.

use proptest::prelude::*;
use rmes_core::acquisition::cond_density;
use rmes_core::gaussian_stats::{log_std_cdf, std_cdf, trunc_gauss_entropy, UpperTruncatedGaussian};
use rmes_core::rng::derive_seed;
use rmes_core::*;

fn stats() -> impl Strategy<Value = PredictiveStats> {
    (-5.0f64..5.0, 1e-6f64..10.0, 1e-6f64..10.0).prop_map(|(m, v, n)| PredictiveStats::new(m, v, n))
}

fn nu_block() -> NuBlock {
    NuBlock::from_seed(2_000, 99).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_cdf_is_monotone_and_consistent(a in -40.0f64..8.0, b in -40.0f64..8.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(log_std_cdf(lo) <= log_std_cdf(hi));
        prop_assert!(log_std_cdf(hi) <= 0.0);
        if hi > -30.0 {
            let direct = std_cdf(hi).ln();
            prop_assert!((log_std_cdf(hi) - direct).abs() <= 1e-9 * direct.abs().max(1e-6));
        }
    }

    #[test]
    fn truncation_never_increases_entropy(mean in -5.0f64..5.0, std in 1e-3f64..10.0, upper in -50.0f64..50.0) {
        let tg = UpperTruncatedGaussian::new(mean, std, upper).unwrap();
        let gaussian = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * std * std).ln();
        let h = trunc_gauss_entropy(&tg);
        prop_assert!(h.is_finite());
        prop_assert!(h <= gaussian + 1e-12);
    }

    #[test]
    fn mes_is_nonnegative_and_finite(s in stats(), fs in proptest::collection::vec(-20.0f64..20.0, 1..6)) {
        let v = mes_value(&s, &fs);
        prop_assert!(v.is_finite());
        prop_assert!(v >= -1e-12);
    }

    #[test]
    fn rectified_density_is_a_finite_nonnegative_density(
        s in stats(),
        f in -10.0f64..10.0,
        y in -40.0f64..40.0,
    ) {
        let p = RectifiedDensityParams::from_stats(&s, f).unwrap();
        let d = cond_density(&p, y);
        prop_assert!(d.is_finite() && d >= 0.0);
        let ld = p.log_density(y);
        if d > 1e-300 {
            prop_assert!((ld - d.ln()).abs() < 1e-9 * ld.abs().max(1.0));
        }
    }

    #[test]
    fn rmes_is_finite_and_vanishes_for_one_max_value(s in stats(), f in -10.0f64..10.0, spread in 0.1f64..3.0) {
        let nu = nu_block();
        let single = [f];
        let triple = [f, f + spread, f + 2.0 * spread];
        let ctx1 = AcqContext { max_values: &single, nu: nu.samples(), y_best: 0.0, ucb_beta: 0.0, std_floor: 0.0 };
        prop_assert_eq!(rmes_value(&s, &ctx1), 0.0);
        let ctx3 = AcqContext { max_values: &triple, ..ctx1 };
        prop_assert!(rmes_value(&s, &ctx3).is_finite());
    }

    #[test]
    fn ei_dominates_improvement_of_the_mean(s in stats(), best in -5.0f64..5.0) {
        let v = ei_value(&s, best);
        prop_assert!(v >= 0.0);
        prop_assert!(v >= s.mean - best - 1e-12);
    }

    #[test]
    fn ucb_is_linear_in_beta(s in stats(), beta in 0.0f64..10.0) {
        prop_assert!((ucb_value(&s, beta) - (s.mean + beta * s.latent_std())).abs() < 1e-12);
    }

    #[test]
    fn posterior_variance_stays_between_zero_and_the_prior(
        xs in proptest::collection::vec(0.0f64..1.0, 1..12),
        query in 0.0f64..1.0,
        ell in 0.05f64..2.0,
        sig in 0.1f64..5.0,
        noise in 0.0f64..0.5,
    ) {
        let data = Dataset::new(xs.iter().map(|x| vec![*x]).collect(), xs.iter().map(|x| (6.0 * x).sin()).collect()).unwrap();
        let model = PosteriorModel::fit(data, KernelHyperparams::isotropic(1, ell, sig, noise).unwrap()).unwrap();
        let p = model.predict(&[query]).unwrap();
        prop_assert!(p.latent_variance >= 0.0);
        prop_assert!(p.latent_variance <= sig * (1.0 + 1e-9));
        prop_assert!((p.observation_variance - p.latent_variance - noise).abs() < 1e-9 * sig.max(1.0));
    }

    #[test]
    fn unit_box_mapping_round_trips(
        lo in proptest::collection::vec(-100.0f64..0.0, 3),
        width in proptest::collection::vec(1e-3f64..100.0, 3),
        u in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
        let d = Domain::new(lo, hi).unwrap();
        let x = d.from_unit(&u);
        prop_assert!(d.contains(&x));
        for (a, b) in d.to_unit(&x).iter().zip(&u) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn derived_seeds_depend_on_every_path_component(master in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assert_eq!(derive_seed(master, &[a, b]), derive_seed(master, &[a, b]));
        prop_assert_ne!(derive_seed(master, &[a, b]), derive_seed(master, &[a, b + 1]));
        prop_assert_ne!(derive_seed(master, &[a]), derive_seed(master, &[a, 0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn adam_never_leaves_a_finite_state(g in proptest::collection::vec(-1e6f64..1e6, 2), x in proptest::collection::vec(-1.0f64..1.0, 2)) {
        let mut adam = AdamState::new(2, 0.05).unwrap();
        let next = adam.step(&x, &g).unwrap();
        for (a, b) in next.iter().zip(&x) {
            prop_assert!(a.is_finite());
            // the first Adam step moves each coordinate by at most the step size
            prop_assert!((a - b).abs() <= 0.05 + 1e-12);
        }
    }
}
