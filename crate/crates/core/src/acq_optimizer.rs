//! Maximizing acquisitions over a box.
//!
//! Stochastic acquisitions are optimized with common random numbers: one
//! [`NuBlock`] is drawn per call and shared by every restart and step, so the
//! objective seen by Adam is a fixed smooth function of `x`. Candidates are
//! then re-ranked under a much larger block before one is returned. All
//! iterates live in unit-box coordinates and are projected back into the box
//! after each step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::acquisition::Acquisition;
use crate::error::{check_dim, Error, Result};
use crate::gp::{Domain, PosteriorModel};

/// Shared standard-normal draws ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuBlock {
    samples: Vec<f64>,
    seed: u64,
}

impl NuBlock {
    /// `count` i.i.d. 𝓝(0, 1) values from a stream seeded by `seed`.
    pub fn from_seed(count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("ν block needs at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..count).map(|_| rng.sample(StandardNormal)).collect();
        Ok(Self { samples, seed })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Draws a ν block whose seed is taken from `rng`.
pub fn draw_nu_block<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<NuBlock> {
    NuBlock::from_seed(count, rng.random())
}

/// Bias-corrected Adam, used for ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
    step_size: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl AdamState {
    pub fn new(dim: usize, step_size: f64) -> Result<Self> {
        Self::with_params(dim, step_size, 0.9, 0.999, 1e-8)
    }

    pub fn with_params(dim: usize, step_size: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidInput(format!("Adam step size {step_size}")));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::InvalidInput(format!("Adam decay rates {beta1}, {beta2}")));
        }
        Ok(Self {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
            step_size,
            beta1,
            beta2,
            epsilon,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One ascent step from `x` along `gradient`. A non-finite gradient is
    /// rejected with the state left untouched.
    pub fn step(&mut self, x: &[f64], gradient: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.first_moment.len(), x.len())?;
        check_dim(self.first_moment.len(), gradient.len())?;
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput("non-finite gradient; Adam step rejected".into()));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        Ok(x.iter()
            .zip(gradient)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
            .map(|((xi, g), (m, v))| {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                xi + self.step_size * m_hat / (v_hat.sqrt() + self.epsilon)
            })
            .collect())
    }
}

/// Budgets for acquisition maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub restarts: usize,
    pub steps: usize,
    /// ν samples shared by all Adam iterates.
    pub nu_samples: usize,
    /// ν samples used to re-rank the final candidates.
    pub rerank_nu_samples: usize,
    pub scan_points: usize,
    /// Adam step size in unit-box coordinates.
    pub step_size: f64,
    /// Step for finite-difference checks, unit-box coordinates.
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            steps: 150,
            nu_samples: 64,
            rerank_nu_samples: 2_000,
            scan_points: 1000,
            step_size: 0.05,
            fd_step: 1e-6,
            seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.restarts,
            self.steps,
            self.nu_samples,
            self.rerank_nu_samples,
            self.scan_points,
        ];
        if counts.contains(&0) || !(self.step_size > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::InvalidInput(format!("optimizer budgets must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Result of an acquisition maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximizer {
    pub x: Vec<f64>,
    /// Acquisition value under the re-ranking block.
    pub value: f64,
}

fn to_unit_gradient(domain: &Domain, grad: &[f64]) -> Vec<f64> {
    grad.iter().zip(domain.widths()).map(|(g, w)| g * w).collect()
}

fn project_unit(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

/// Indices of the `k` largest finite values, best first; ties keep index order.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Multi-start Adam over the box with one shared ν block, followed by
/// re-ranking of the restart results and best scan points under a large block.
pub fn optimize_acquisition<R: Rng + ?Sized>(
    acq: &dyn Acquisition,
    domain: &Domain,
    config: &OptimConfig,
    rng: &mut R,
) -> Result<Maximizer> {
    config.validate()?;
    let nu = draw_nu_block(config.nu_samples, rng)?;
    let rerank_nu = draw_nu_block(config.rerank_nu_samples, rng)?;

    let scan: Vec<Vec<f64>> = (0..config.scan_points)
        .map(|_| (0..domain.dim()).map(|_| rng.random::<f64>()).collect())
        .collect();
    let scan_values: Vec<f64> = scan
        .iter()
        .map(|u| acq.value(&domain.from_unit(u), nu.samples()).unwrap_or(f64::NAN))
        .collect();
    let starts = top_k(&scan_values, config.restarts);

    // restart results first so that ties resolve to the lowest restart index
    let mut shortlist: Vec<Vec<f64>> = Vec::new();
    for &s in &starts {
        let mut x = scan[s].clone();
        let mut best = (scan_values[s], x.clone());
        let mut adam = AdamState::new(domain.dim(), config.step_size)?;
        for _ in 0..config.steps {
            let (v, g) = match acq.value_and_gradient(&domain.from_unit(&x), nu.samples()) {
                Ok(r) => r,
                Err(_) => break,
            };
            if v.is_finite() && v > best.0 {
                best = (v, x.clone());
            }
            match adam.step(&x, &to_unit_gradient(domain, &g)) {
                Ok(next) => x = next,
                Err(e) => {
                    log::debug!("{}: {e}", acq.name());
                    break;
                }
            }
            project_unit(&mut x);
        }
        if best.1 != x {
            shortlist.push(best.1);
        }
        shortlist.push(x);
    }
    shortlist.extend(starts.iter().map(|&s| scan[s].clone()));
    // a restart that never moved duplicates its scan point
    let mut seen = Vec::with_capacity(shortlist.len());
    shortlist.retain(|u| {
        let dup = seen.contains(u);
        if !dup {
            seen.push(u.clone());
        }
        !dup
    });

    let mut winner: Option<Maximizer> = None;
    for u in shortlist {
        let x = domain.from_unit(&u);
        let v = match acq.value(&x, rerank_nu.samples()) {
            Ok(v) if v.is_finite() => v,
            _ => continue,
        };
        if winner.as_ref().is_none_or(|w| v > w.value) {
            winner = Some(Maximizer { x, value: v });
        }
    }
    winner.ok_or_else(|| Error::NonFiniteAcquisition(acq.name().to_string()))
}

/// Gradient of the fixed-ν acquisition objective at `x`.
pub fn gradient_of(acq: &dyn Acquisition, x: &[f64], nu: &NuBlock) -> Result<Vec<f64>> {
    let (_, g) = acq.value_and_gradient(x, nu.samples())?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{}: non-finite gradient", acq.name())));
    }
    Ok(g)
}

/// Projected gradient ascent with step doubling/halving, in unit
/// coordinates. Stops after `max_evals` evaluations or once the step
/// collapses. Returns the best point seen.
pub(crate) fn hill_climb<F>(mut f: F, start: Vec<f64>, max_evals: usize, initial_step: f64) -> Option<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let (mut value, mut grad) = f(&start)?;
    let mut x = start;
    let mut step = initial_step;
    for _ in 1..max_evals {
        // drop components pushing out of the box
        let dir: Vec<f64> = x
            .iter()
            .zip(&grad)
            .map(|(xi, g)| {
                if (*xi <= 0.0 && *g < 0.0) || (*xi >= 1.0 && *g > 0.0) {
                    0.0
                } else {
                    *g
                }
            })
            .collect();
        let norm = dir.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() || step < 1e-10 {
            break;
        }
        let mut cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + step * d / norm).collect();
        project_unit(&mut cand);
        match f(&cand) {
            Some((v, g)) if v > value => {
                x = cand;
                value = v;
                grad = g;
                step = (step * 2.0).min(0.5);
            }
            _ => step *= 0.5,
        }
    }
    Some((value, x))
}

/// Maximizer of the posterior mean: the best of the training inputs, a
/// random scan, and deterministic ascent from the strongest of those.
pub fn argmax_posterior_mean(model: &PosteriorModel, domain: &Domain, config: &OptimConfig) -> Result<Maximizer> {
    config.validate()?;
    check_dim(domain.dim(), model.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut candidates: Vec<Vec<f64>> = model
        .dataset()
        .inputs()
        .iter()
        .map(|x| domain.to_unit(x))
        .collect();
    let n_train = candidates.len();
    candidates.extend((0..config.scan_points).map(|_| (0..domain.dim()).map(|_| rng.random::<f64>()).collect::<Vec<_>>()));
    let values: Vec<f64> = candidates
        .iter()
        .map(|u| model.predict_mean(&domain.from_unit(u)))
        .collect::<Result<_>>()?;

    let widths = domain.widths();
    let objective = |u: &[f64]| {
        let (m, g) = model.mean_with_gradient(&domain.from_unit(u)).ok()?;
        Some((m, g.iter().zip(&widths).map(|(gi, w)| gi * w).collect()))
    };

    // training inputs are compared at their own coordinates, not re-mapped
    let mut best = Maximizer {
        x: Vec::new(),
        value: f64::NEG_INFINITY,
    };
    for (i, v) in values.iter().enumerate() {
        if *v > best.value {
            let x = if i < n_train {
                model.dataset().inputs()[i].clone()
            } else {
                domain.from_unit(&candidates[i])
            };
            best = Maximizer { x, value: *v };
        }
    }
    for s in top_k(&values, config.restarts) {
        if let Some((v, u)) = hill_climb(objective, candidates[s].clone(), config.steps, 0.05) {
            if v > best.value {
                best = Maximizer {
                    x: domain.from_unit(&u),
                    value: v,
                };
            }
        }
    }
    Ok(best)
}
