//! Reduction of run records into per-iteration regret curves and
//! distance-to-maximizer histograms.

use std::collections::BTreeMap;

use rmes_core::AcquisitionKind;

use crate::runner::RunRecord;

/// Regrets below this are clipped before taking log10.
pub const LOG_CLIP: f64 = 1e-12;
/// Bins in each distance histogram.
pub const HISTOGRAM_BINS: usize = 20;

/// Statistics of one acquisition at one iteration across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    pub acquisition: AcquisitionKind,
    pub iteration: usize,
    /// Repetitions contributing a finite row.
    pub count: usize,
    pub mean_simple_regret: f64,
    pub mean_inference_regret: f64,
    pub log10_mean_simple_regret: f64,
    pub log10_mean_inference_regret: f64,
    pub median_simple_regret: f64,
    pub median_inference_regret: f64,
}

/// Counts of query distances to the true maximizer in equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    pub acquisition: AcquisitionKind,
    /// `HISTOGRAM_BINS + 1` edges shared by all acquisitions.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<IterationSummary>,
    pub histograms: Vec<DistanceHistogram>,
}

impl ResultTable {
    pub fn row(&self, acquisition: AcquisitionKind, iteration: usize) -> Option<&IterationSummary> {
        self.rows
            .iter()
            .find(|r| r.acquisition == acquisition && r.iteration == iteration)
    }

    pub fn histogram(&self, acquisition: AcquisitionKind) -> Option<&DistanceHistogram> {
        self.histograms.iter().find(|h| h.acquisition == acquisition)
    }
}

pub fn log10_clipped(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.max(LOG_CLIP).log10()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Per-iteration means (then log10) and medians over repetitions for the
/// BO iterations (initial design rows and failure rows are left out), plus
/// distance histograms over the same rows.
pub fn aggregate(records: &[RunRecord]) -> ResultTable {
    let used: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.iteration >= 1 && r.failure.is_none())
        .collect();

    let mut groups: BTreeMap<(usize, usize), (AcquisitionKind, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let order = |k: AcquisitionKind| AcquisitionKind::ALL.iter().position(|a| *a == k).unwrap_or(usize::MAX);
    for r in &used {
        let e = groups
            .entry((order(r.acquisition), r.iteration))
            .or_insert_with(|| (r.acquisition, Vec::new(), Vec::new()));
        if r.simple_regret.is_finite() {
            e.1.push(r.simple_regret);
        }
        if r.inference_regret.is_finite() {
            e.2.push(r.inference_regret);
        }
    }
    let rows = groups
        .into_iter()
        .map(|((_, iteration), (acquisition, sr, ir))| {
            let (msr, mir) = (mean(&sr), mean(&ir));
            IterationSummary {
                acquisition,
                iteration,
                count: sr.len(),
                mean_simple_regret: msr,
                mean_inference_regret: mir,
                log10_mean_simple_regret: log10_clipped(msr),
                log10_mean_inference_regret: log10_clipped(mir),
                median_simple_regret: median(&sr),
                median_inference_regret: median(&ir),
            }
        })
        .collect();

    let distances: Vec<(AcquisitionKind, f64)> = used
        .iter()
        .filter(|r| r.distance_to_maximizer.is_finite())
        .map(|r| (r.acquisition, r.distance_to_maximizer))
        .collect();
    let top = distances.iter().map(|d| d.1).fold(0.0, f64::max);
    let width = if top > 0.0 { top / HISTOGRAM_BINS as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|i| i as f64 * width).collect();
    let mut kinds: Vec<AcquisitionKind> = distances.iter().map(|d| d.0).collect();
    kinds.sort_by_key(|k| order(*k));
    kinds.dedup();
    let histograms = kinds
        .into_iter()
        .map(|k| {
            let mut counts = vec![0; HISTOGRAM_BINS];
            for (_, d) in distances.iter().filter(|d| d.0 == k) {
                let bin = ((d / width) as usize).min(HISTOGRAM_BINS - 1);
                counts[bin] += 1;
            }
            DistanceHistogram {
                acquisition: k,
                edges: edges.clone(),
                counts,
            }
        })
        .collect();
    ResultTable { rows, histograms }
}
