//! The Bayesian-optimization loop and its regret bookkeeping.
//!
//! The loop is split along the information boundary: [`BoSession`] makes
//! decisions from observations only (it holds a [`BlackBox`], never a
//! [`GroundTruth`]), while [`Scorer`] turns the session's queries into regret
//! figures using the truth.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rmes_core::rng::stream;
use rmes_core::{
    argmax_posterior_mean, mle_fit, optimize_acquisition, sample_max_values, AcquisitionKind, Dataset, Domain,
    KernelHyperparams, MleConfig, ModelAcquisition, OptimConfig, PosteriorModel,
};

use crate::config::{BenchmarkConfig, HyperparameterPolicy};
use crate::error::Result;
use crate::objective::{GroundTruth, Objective};

/// The only view of the objective the decision path gets: a domain and a
/// noiseless oracle (noise is added by [`observe`]).
pub trait BlackBox: Sync {
    fn domain(&self) -> &Domain;
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

impl BlackBox for Objective {
    fn domain(&self) -> &Domain {
        Objective::domain(self)
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Objective::evaluate(self, x)
    }
}

/// `f(x) + σ_n·ε` with one standard-normal draw from `rng`.
pub fn observe<R: Rng + ?Sized>(objective: &dyn BlackBox, x: &[f64], sigma_n: f64, rng: &mut R) -> Result<f64> {
    let f = objective.evaluate(x)?;
    let eps: f64 = rng.sample(StandardNormal);
    Ok(if sigma_n == 0.0 { f } else { f + sigma_n * eps })
}

/// `f* − max_x f(x)` over the queried inputs, from their noiseless values.
pub fn simple_regret(truth: &GroundTruth, true_values: &[f64]) -> f64 {
    truth.max_value - true_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `f* − f(x̂)` with x̂ the maximizer of the posterior mean.
pub fn inference_regret(
    objective: &dyn BlackBox,
    truth: &GroundTruth,
    model: &PosteriorModel,
    config: &OptimConfig,
) -> Result<f64> {
    let x_hat = argmax_posterior_mean(model, objective.domain(), config)?;
    Ok(truth.max_value - objective.evaluate(&x_hat.x)?)
}

/// One row of output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub acquisition: AcquisitionKind,
    pub repetition: usize,
    /// 0 for initial design points, then 1..=T.
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub simple_regret: f64,
    pub inference_regret: f64,
    pub distance_to_maximizer: f64,
    pub wall_time_ms: f64,
    /// Set on the row that ends a repetition early.
    pub failure: Option<String>,
}

/// Hyperparameter guess before any fitting: lengthscales a fifth of the box,
/// signal variance from the output second moment.
fn initial_hyperparams(domain: &Domain, data: &Dataset, noise_variance: f64) -> Result<KernelHyperparams> {
    let m2 = data.outputs().iter().map(|y| y * y).sum::<f64>() / data.len().max(1) as f64;
    Ok(KernelHyperparams::new(
        domain.widths().iter().map(|w| 0.2 * w).collect(),
        m2.max(1e-2),
        noise_variance,
    )?)
}

/// MLE starts per iteration: the previous fit plus random restarts.
pub const MLE_STARTS: usize = 3;

/// Decision state of one repetition for one acquisition.
pub struct BoSession<'a> {
    objective: &'a dyn BlackBox,
    config: &'a BenchmarkConfig,
    kind: AcquisitionKind,
    repetition: usize,
    data: Dataset,
    hyper: Option<KernelHyperparams>,
    noise_rng: ChaCha8Rng,
}

/// What a decision step produced.
#[derive(Debug, Clone)]
pub struct Step {
    pub x: Vec<f64>,
    pub y: f64,
    /// Model refit (same hyperparameters) on the data including this step.
    pub model: PosteriorModel,
    pub elapsed_ms: f64,
}

impl<'a> BoSession<'a> {
    /// Draws the initial design. Initial points and their noise come from
    /// a stream shared by all acquisitions of the same repetition.
    pub fn start(
        objective: &'a dyn BlackBox,
        config: &'a BenchmarkConfig,
        kind: AcquisitionKind,
        repetition: usize,
    ) -> Result<(Self, Vec<(Vec<f64>, f64)>)> {
        let mut init_rng = stream(config.seed, &[repetition as u64, 0]);
        let mut data = Dataset::empty();
        let mut design = Vec::new();
        for _ in 0..config.init_points {
            let x = objective.domain().sample_uniform(&mut init_rng);
            let y = observe(objective, &x, config.sigma_n, &mut init_rng)?;
            data.push(x.clone(), y)?;
            design.push((x, y));
        }
        let session = Self {
            objective,
            config,
            kind,
            repetition,
            data,
            hyper: None,
            noise_rng: stream(config.seed, &[repetition as u64, 1, kind_id(kind)]),
        };
        Ok((session, design))
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn noise_variance(&self) -> f64 {
        self.config.sigma_n * self.config.sigma_n
    }

    /// Hyperparameters for the next decision according to the policy;
    /// warm-started from the previous fit.
    fn refresh_hyperparams(&mut self, iteration: usize) -> Result<KernelHyperparams> {
        let domain = self.objective.domain();
        let start = match &self.hyper {
            Some(h) => h.clone(),
            None => initial_hyperparams(domain, &self.data, self.noise_variance())?,
        };
        let hyper = match self.config.hyperparameters {
            HyperparameterPolicy::Fixed => start,
            HyperparameterPolicy::MleEveryIteration => {
                let seed = rmes_core::rng::derive_seed(
                    self.config.seed,
                    &[self.repetition as u64, 2, kind_id(self.kind), iteration as u64],
                );
                let mut mle = MleConfig::new(domain, seed).with_fixed_noise(self.noise_variance());
                // the warm start carries earlier searches forward
                mle.starts = MLE_STARTS;
                mle_fit(&self.data, &start, &mle)?
            }
        };
        self.hyper = Some(hyper.clone());
        Ok(hyper)
    }

    /// Model of the current data under the current hyperparameters (the
    /// initial guess before the first step).
    pub fn current_model(&self) -> Result<PosteriorModel> {
        let hyper = match &self.hyper {
            Some(h) => h.clone(),
            None => initial_hyperparams(self.objective.domain(), &self.data, self.noise_variance())?,
        };
        Ok(PosteriorModel::fit(self.data.clone(), hyper)?)
    }

    /// One iteration: fit, sample max-values, maximize the acquisition,
    /// observe.
    pub fn step(&mut self, iteration: usize) -> Result<Step> {
        let started = Instant::now();
        let domain = self.objective.domain();
        let hyper = self.refresh_hyperparams(iteration)?;
        let t_fit = started.elapsed();
        let model = PosteriorModel::fit(self.data.clone(), hyper.clone())?;
        let mut rng = stream(
            self.config.seed,
            &[self.repetition as u64, 3, kind_id(self.kind), iteration as u64],
        );
        let max_values = if self.kind.needs_max_values() {
            sample_max_values(&model, domain, self.config.max_value_count, &self.config.sampler, &mut rng)?
                .values()
                .to_vec()
        } else {
            Vec::new()
        };
        let t_sample = started.elapsed();
        let acq = ModelAcquisition::new(&model, self.kind, max_values)?.with_ucb_beta(self.config.ucb_beta);
        let choice = optimize_acquisition(&acq, domain, &self.config.optimizer, &mut rng)?;
        let elapsed = started.elapsed();
        log::debug!(
            "{} rep {} it {iteration}: fit {:.1} ms, max-values {:.1} ms, acquisition {:.1} ms",
            self.kind,
            self.repetition,
            t_fit.as_secs_f64() * 1e3,
            (t_sample - t_fit).as_secs_f64() * 1e3,
            (elapsed - t_sample).as_secs_f64() * 1e3
        );
        let elapsed_ms = elapsed.as_secs_f64() * 1e3;
        let y = observe(self.objective, &choice.x, self.config.sigma_n, &mut self.noise_rng)?;
        self.data.push(choice.x.clone(), y)?;
        let model = PosteriorModel::fit(self.data.clone(), hyper)?;
        Ok(Step {
            x: choice.x,
            y,
            model,
            elapsed_ms,
        })
    }
}

fn kind_id(kind: AcquisitionKind) -> u64 {
    AcquisitionKind::ALL
        .iter()
        .position(|k| *k == kind)
        .expect("kind is listed") as u64
}

/// Regret bookkeeping for one repetition.
pub struct Scorer<'a> {
    objective: &'a dyn BlackBox,
    truth: Option<&'a GroundTruth>,
    best_true: f64,
    ir_config: OptimConfig,
}

impl<'a> Scorer<'a> {
    pub fn new(objective: &'a dyn BlackBox, truth: Option<&'a GroundTruth>, optimizer: &OptimConfig) -> Self {
        Self {
            objective,
            truth,
            best_true: f64::NEG_INFINITY,
            ir_config: optimizer.clone(),
        }
    }

    /// (simple regret, inference regret, distance) after querying `x`.
    /// All NaN when no ground truth is available.
    pub fn score(&mut self, x: &[f64], model: &PosteriorModel, seed: u64) -> Result<(f64, f64, f64)> {
        let Some(truth) = self.truth else {
            return Ok((f64::NAN, f64::NAN, f64::NAN));
        };
        self.best_true = self.best_true.max(self.objective.evaluate(x)?);
        let sr = simple_regret(truth, &[self.best_true]);
        let mut config = self.ir_config.clone();
        config.seed = seed;
        let ir = inference_regret(self.objective, truth, model, &config)?;
        let dist = x
            .iter()
            .zip(&truth.maximizer)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok((sr, ir, dist))
    }
}

fn failure_row(kind: AcquisitionKind, repetition: usize, iteration: usize, dim: usize, message: String) -> RunRecord {
    log::error!("{kind} repetition {repetition} iteration {iteration}: {message}");
    RunRecord {
        acquisition: kind,
        repetition,
        iteration,
        x: vec![f64::NAN; dim],
        y: f64::NAN,
        simple_regret: f64::NAN,
        inference_regret: f64::NAN,
        distance_to_maximizer: f64::NAN,
        wall_time_ms: 0.0,
        failure: Some(message),
    }
}

/// All records of one repetition. Errors end the repetition with a failure
/// row instead of propagating.
pub fn run_repetition(
    objective: &dyn BlackBox,
    truth: Option<&GroundTruth>,
    config: &BenchmarkConfig,
    kind: AcquisitionKind,
    repetition: usize,
) -> Vec<RunRecord> {
    let dim = objective.domain().dim();
    let mut records = Vec::new();
    let ir_seed = |iteration: usize, k: usize| {
        rmes_core::rng::derive_seed(config.seed, &[repetition as u64, 4, kind_id(kind), iteration as u64, k as u64])
    };
    let (mut session, design) = match BoSession::start(objective, config, kind, repetition) {
        Ok(s) => s,
        Err(e) => {
            records.push(failure_row(kind, repetition, 0, dim, e.to_string()));
            return records;
        }
    };
    let mut scorer = Scorer::new(objective, truth, &config.optimizer);

    // initial rows: regrets as if each design point had just been added
    let mut partial = Dataset::empty();
    for (k, (x, y)) in design.iter().enumerate() {
        let scored = partial
            .push(x.clone(), *y)
            .map_err(Into::into)
            .and_then(|_| initial_hyperparams(objective.domain(), &partial, config.sigma_n * config.sigma_n))
            .and_then(|h| Ok(PosteriorModel::fit(partial.clone(), h)?))
            .and_then(|m| scorer.score(x, &m, ir_seed(0, k)));
        match scored {
            Ok((sr, ir, dist)) => records.push(RunRecord {
                acquisition: kind,
                repetition,
                iteration: 0,
                x: x.clone(),
                y: *y,
                simple_regret: sr,
                inference_regret: ir,
                distance_to_maximizer: dist,
                wall_time_ms: 0.0,
                failure: None,
            }),
            Err(e) => {
                records.push(failure_row(kind, repetition, 0, dim, e.to_string()));
                return records;
            }
        }
    }

    for t in 1..=config.iterations {
        let outcome = session
            .step(t)
            .and_then(|s| scorer.score(&s.x, &s.model, ir_seed(t, 0)).map(|m| (s, m)));
        match outcome {
            Ok((s, (sr, ir, dist))) => records.push(RunRecord {
                acquisition: kind,
                repetition,
                iteration: t,
                x: s.x,
                y: s.y,
                simple_regret: sr,
                inference_regret: ir,
                distance_to_maximizer: dist,
                wall_time_ms: if config.record_wall_time { s.elapsed_ms } else { 0.0 },
                failure: None,
            }),
            Err(e) => {
                records.push(failure_row(kind, repetition, t, dim, e.to_string()));
                break;
            }
        }
    }
    records
}

/// Runs every (acquisition, repetition) pair. Repetitions are independent
/// and spread over the available cores; output order is fixed regardless.
pub fn run_bo_loop(objective: &dyn BlackBox, truth: Option<&GroundTruth>, config: &BenchmarkConfig) -> Vec<RunRecord> {
    let jobs: Vec<(AcquisitionKind, usize)> = config
        .acquisitions
        .iter()
        .flat_map(|&k| (0..config.repetitions).map(move |r| (k, r)))
        .collect();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.len())
        .max(1);
    let mut results: Vec<Vec<RunRecord>> = vec![Vec::new(); jobs.len()];
    if workers == 1 {
        for (slot, &(k, r)) in results.iter_mut().zip(&jobs) {
            *slot = run_repetition(objective, truth, config, k, r);
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let done = std::sync::Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(&(k, r)) = jobs.get(i) else { break };
                    let rows = run_repetition(objective, truth, config, k, r);
                    done.lock().expect("no worker panics while holding the lock")[i] = rows;
                });
            }
        });
    }
    results.into_iter().flatten().collect()
}

/// Objective + truth + loop for a parsed configuration.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let objective = Objective::new(config.objective.clone(), config.domain.clone())?;
    let truth = if objective.supports_truth() {
        Some(GroundTruth::compute(&objective)?)
    } else {
        None
    };
    Ok(run_bo_loop(&objective, truth.as_ref(), config))
}
