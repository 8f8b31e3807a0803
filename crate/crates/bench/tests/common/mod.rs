#![allow(dead_code)]

use rmes_bench::{BenchmarkConfig, ObjectiveKind};
use rmes_core::{OptimConfig, SamplerConfig};

/// A configuration with budgets cut down so that loop tests take seconds.
pub fn quick_config(objective: ObjectiveKind) -> BenchmarkConfig {
    let mut c = BenchmarkConfig::new(objective);
    c.iterations = 3;
    c.repetitions = 2;
    c.seed = 17;
    c.optimizer = OptimConfig {
        restarts: 3,
        steps: 30,
        rerank_nu_samples: 256,
        scan_points: 200,
        ..OptimConfig::default()
    };
    c.sampler = SamplerConfig {
        feature_count: 256,
        restarts: 3,
        steps: 40,
        scan_points: 200,
    };
    c
}

/// The same budgets as key = value lines for config-file tests.
pub const QUICK_KEYS: &str = "\
optimizer_restarts = 3
optimizer_steps = 30
rerank_nu_samples = 256
optimizer_scan_points = 200
feature_count = 256
sampler_restarts = 3
sampler_steps = 40
sampler_scan_points = 200
";
