//! Invariants of the harness's pure pieces, checked with proptest.

use std::path::Path;

use proptest::prelude::*;
use rmes_bench::aggregate::{log10_clipped, median, LOG_CLIP};
use rmes_bench::config::parse_objective;
use rmes_bench::objective::GridData;
use rmes_bench::output::fmt_real;
use rmes_bench::runner::simple_regret;
use rmes_bench::{aggregate, BenchmarkConfig, GroundTruth, ObjectiveKind, RunRecord};
use rmes_core::AcquisitionKind;

fn record(kind: AcquisitionKind, repetition: usize, iteration: usize, sr: f64, ir: f64, dist: f64) -> RunRecord {
    RunRecord {
        acquisition: kind,
        repetition,
        iteration,
        x: vec![0.0, 0.0],
        y: 0.0,
        simple_regret: sr,
        inference_regret: ir,
        distance_to_maximizer: dist,
        wall_time_ms: 0.0,
        failure: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reals_round_trip_through_the_csv_format(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn clipped_log_is_bounded_below(v in 0.0f64..1e6) {
        let l = log10_clipped(v);
        prop_assert!(l >= LOG_CLIP.log10() - 1e-12);
        if v >= LOG_CLIP {
            prop_assert!((l - v.log10()).abs() < 1e-12);
        }
    }

    #[test]
    fn median_lies_between_the_extremes(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
        let m = median(&v);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= m && m <= hi);
        let below = v.iter().filter(|x| **x < m).count();
        let above = v.iter().filter(|x| **x > m).count();
        prop_assert!(below <= v.len() / 2 && above <= v.len() / 2);
    }

    #[test]
    fn simple_regret_only_decreases_as_queries_accumulate(
        values in proptest::collection::vec(-10.0f64..10.0, 1..30),
        shift in -100.0f64..100.0,
    ) {
        let truth = GroundTruth { max_value: 10.0, maximizer: vec![0.0] };
        let shifted = GroundTruth { max_value: 10.0 + shift, maximizer: vec![0.0] };
        let mut last = f64::INFINITY;
        for k in 1..=values.len() {
            let sr = simple_regret(&truth, &values[..k]);
            prop_assert!(sr <= last && sr >= 0.0);
            let moved: Vec<f64> = values[..k].iter().map(|v| v + shift).collect();
            prop_assert!((simple_regret(&shifted, &moved) - sr).abs() < 1e-9);
            last = sr;
        }
    }

    #[test]
    fn aggregation_matches_direct_means(
        regrets in proptest::collection::vec(proptest::collection::vec(0.0f64..100.0, 4), 1..6),
    ) {
        // regrets[r][t]: repetition r, iteration t + 1; one initial row each
        let kind = AcquisitionKind::Mes;
        let mut records = Vec::new();
        for (r, row) in regrets.iter().enumerate() {
            records.push(record(kind, r, 0, 1e9, 1e9, 1.0));
            for (t, v) in row.iter().enumerate() {
                records.push(record(kind, r, t + 1, *v, 2.0 * v, *v));
            }
        }
        let table = aggregate(&records);
        prop_assert_eq!(table.rows.len(), 4);
        for t in 1..=4 {
            let row = table.row(kind, t).unwrap();
            let mean = regrets.iter().map(|r| r[t - 1]).sum::<f64>() / regrets.len() as f64;
            prop_assert_eq!(row.count, regrets.len());
            prop_assert!((row.mean_simple_regret - mean).abs() <= 1e-9 * mean.max(1.0));
            prop_assert!((row.mean_inference_regret - 2.0 * mean).abs() <= 1e-9 * mean.max(1.0));
            prop_assert!((row.log10_mean_simple_regret - log10_clipped(row.mean_simple_regret)).abs() < 1e-12);
        }
        let h = table.histogram(kind).unwrap();
        prop_assert_eq!(h.counts.iter().sum::<usize>(), 4 * regrets.len());
        prop_assert_eq!(h.edges.len(), h.counts.len() + 1);
    }

    #[test]
    fn well_formed_grids_parse_back(
        rows in 1usize..6,
        cols in 1usize..6,
        x0 in -100.0f64..100.0,
        w in 0.1f64..100.0,
        seed in any::<u64>(),
    ) {
        let n = rows * cols;
        let values: Vec<f64> = (0..n).map(|i| ((seed.wrapping_mul(i as u64 + 1) % 1000) as f64) / 7.0).collect();
        let body: Vec<String> = values.chunks(cols).map(|c| c.iter().map(|v| fmt_real(*v)).collect::<Vec<_>>().join(" ")).collect();
        let text = format!("{rows} {cols} {x0} {} 0 1\n{}\n", x0 + w, body.join("\n"));
        let g = GridData::parse(&text).unwrap();
        prop_assert_eq!((g.rows, g.cols), (rows, cols));
        prop_assert_eq!(&g.values, &values);
        let c = g.cell_center(rows - 1, cols - 1);
        prop_assert!(c[0] < x0 + w && c[1] < 1.0);
    }

    #[test]
    fn numeric_config_keys_round_trip(
        sigma in 0.0f64..2.0,
        t in 0usize..500,
        r in 1usize..50,
        init in 1usize..10,
        f in 1usize..20,
        seed in any::<u64>(),
    ) {
        let text = format!(
            "objective = michalewicz2\nsigma_n = {}\niterations = {t}\nrepetitions = {r}\ninit_points = {init}\nmax_value_count = {f}\nseed = {seed}\n",
            fmt_real(sigma)
        );
        let c = BenchmarkConfig::parse(&text, Path::new(".")).unwrap();
        prop_assert_eq!(c.objective, ObjectiveKind::Michalewicz2);
        prop_assert_eq!(c.sigma_n, sigma);
        prop_assert_eq!((c.iterations, c.repetitions, c.init_points, c.max_value_count, c.seed), (t, r, init, f, seed));
    }

    #[test]
    fn gp_sample_objectives_parse_with_any_spacing(
        seed in any::<u32>(),
        ell in 0.01f64..5.0,
        pad in "[ ]{0,3}",
    ) {
        let text = format!("gp_sample({pad}{seed},{pad}{ell}{pad},1{pad})");
        let kind = parse_objective(&text, Path::new(".")).unwrap();
        prop_assert_eq!(kind, ObjectiveKind::GpSample { seed: seed as u64, lengthscale: ell, signal_variance: 1.0 });
    }
}
