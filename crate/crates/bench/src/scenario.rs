//! 1-D diagnostic scenarios contrasting the MES and RMES choices.
//!
//! A scenario pins a GP (data, hyperparameters), a max-value set and a ν
//! block, evaluates both acquisitions on a grid, and checks the direction in
//! which their argmaxes differ:
//!
//! * `mes_explores` — with small noise MES prefers a point with larger
//!   posterior standard deviation and smaller mean than RMES does;
//! * `mes_exploits` — with large noise MES prefers a point with smaller
//!   standard deviation and larger mean, where the observation noise
//!   dominates the latent uncertainty.

use std::fmt;
use std::path::Path;

use rmes_core::{
    draw_nu_block, mes_value, rmes_value, AcqContext, Dataset, KernelHyperparams, PosteriorModel, PredictiveStats,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    MesExplores,
    MesExploits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
    pub max_values: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub grid_points: usize,
    pub nu_samples: usize,
    pub nu_seed: u64,
    pub expect: Expectation,
}

/// A grid point with its predictive statistics and acquisition value.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub x: f64,
    pub mean: f64,
    pub latent_std: f64,
    pub noise_std: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub name: String,
    pub expect: Expectation,
    pub mes: Choice,
    pub rmes: Choice,
    pub passed: bool,
}

impl fmt::Display for ScenarioOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |c: &Choice| {
            format!(
                "x = {:.4} (μ = {:.4}, σ_x = {:.4}, σ_n = {:.4}, value {:.4})",
                c.x, c.mean, c.latent_std, c.noise_std, c.value
            )
        };
        writeln!(f, "scenario {} ({:?})", self.name, self.expect)?;
        writeln!(f, "  MES  picks {}", show(&self.mes))?;
        writeln!(f, "  RMES picks {}", show(&self.rmes))?;
        write!(f, "  expected direction {}", if self.passed { "reproduced" } else { "NOT reproduced" })
    }
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("cannot parse `{}`", t.trim())))
        .collect()
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Scenario {
            name: String::new(),
            lengthscale: f64::NAN,
            signal_variance: 1.0,
            noise_variance: f64::NAN,
            inputs: Vec::new(),
            outputs: Vec::new(),
            max_values: Vec::new(),
            lower: 0.0,
            upper: 1.0,
            grid_points: 1001,
            nu_samples: 100_000,
            nu_seed: 0,
            expect: Expectation::MesExplores,
        };
        let mut has_expect = false;
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let at = |m: String| BenchError::parse(i + 1, m);
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, found `{content}`")))?;
            let v = v.trim();
            match k.trim() {
                "name" => s.name = v.to_string(),
                "lengthscale" => s.lengthscale = num(v).map_err(at)?,
                "signal_variance" => s.signal_variance = num(v).map_err(at)?,
                "noise_variance" => s.noise_variance = num(v).map_err(at)?,
                "inputs" => s.inputs = list(v).map_err(at)?,
                "outputs" => s.outputs = list(v).map_err(at)?,
                "max_values" => s.max_values = list(v).map_err(at)?,
                "lower" => s.lower = num(v).map_err(at)?,
                "upper" => s.upper = num(v).map_err(at)?,
                "grid_points" => s.grid_points = num(v).map_err(at)?,
                "nu_samples" => s.nu_samples = num(v).map_err(at)?,
                "nu_seed" => s.nu_seed = num(v).map_err(at)?,
                "expect" => {
                    has_expect = true;
                    s.expect = match v {
                        "mes_explores" => Expectation::MesExplores,
                        "mes_exploits" => Expectation::MesExploits,
                        other => return Err(at(format!("expect must be mes_explores or mes_exploits, found `{other}`"))),
                    }
                }
                other => return Err(at(format!("unknown key `{other}`"))),
            }
        }
        let bad = |m: &str| Err(BenchError::Config(format!("scenario: {m}")));
        if !has_expect {
            return bad("missing `expect`");
        }
        if !(s.lengthscale > 0.0) || !(s.noise_variance > 0.0) || !(s.signal_variance > 0.0) {
            return bad("lengthscale, signal_variance and noise_variance must be positive");
        }
        if s.inputs.len() != s.outputs.len() {
            return bad("inputs and outputs differ in length");
        }
        if s.max_values.len() < 2 {
            return bad("at least two max-values are needed to separate MES and RMES");
        }
        if !(s.lower < s.upper) || s.grid_points < 2 || s.nu_samples == 0 {
            return bad("invalid grid or ν settings");
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn model(&self) -> Result<PosteriorModel> {
        let data = Dataset::new(self.inputs.iter().map(|x| vec![*x]).collect(), self.outputs.clone())?;
        let hyper = KernelHyperparams::isotropic(1, self.lengthscale, self.signal_variance, self.noise_variance)?;
        Ok(PosteriorModel::fit(data, hyper)?)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_points)
            .map(|i| self.lower + (self.upper - self.lower) * i as f64 / (self.grid_points - 1) as f64)
            .collect()
    }

    /// Predictive statistics and (MES, RMES) values along the grid.
    pub fn profile(&self) -> Result<Vec<(f64, PredictiveStats, f64, f64)>> {
        let model = self.model()?;
        let nu = draw_nu_block(self.nu_samples, &mut ChaCha8Rng::seed_from_u64(self.nu_seed))?;
        let ctx = AcqContext {
            max_values: &self.max_values,
            nu: nu.samples(),
            y_best: 0.0,
            ucb_beta: 0.0,
            std_floor: 1e-8 * self.signal_variance.sqrt(),
        };
        self.grid()
            .into_iter()
            .map(|x| {
                let s = model.predict(&[x])?;
                Ok((x, s, mes_value(&s, &self.max_values), rmes_value(&s, &ctx)))
            })
            .collect()
    }

    pub fn evaluate(&self) -> Result<ScenarioOutcome> {
        let profile = self.profile()?;
        let pick = |which: fn(&(f64, PredictiveStats, f64, f64)) -> f64| {
            let best = profile
                .iter()
                .max_by(|a, b| which(a).total_cmp(&which(b)))
                .expect("grid is nonempty");
            Choice {
                x: best.0,
                mean: best.1.mean,
                latent_std: best.1.latent_std(),
                noise_std: best.1.noise_variance().sqrt(),
                value: which(best),
            }
        };
        let mes = pick(|p| p.2);
        let rmes = pick(|p| p.3);
        let distinct = (mes.x - rmes.x).abs() > 2.0 * (self.upper - self.lower) / (self.grid_points - 1) as f64;
        let passed = distinct
            && match self.expect {
                Expectation::MesExplores => mes.latent_std > rmes.latent_std && mes.mean < rmes.mean,
                Expectation::MesExploits => {
                    mes.latent_std < rmes.latent_std && mes.mean > rmes.mean && mes.noise_std > mes.latent_std
                }
            };
        Ok(ScenarioOutcome {
            name: self.name.clone(),
            expect: self.expect,
            mes,
            rmes,
            passed,
        })
    }
}
