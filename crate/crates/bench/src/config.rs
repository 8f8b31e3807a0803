//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # Branin, small noise
//! objective = branin
//! acquisitions = rmes, mes, ei, ucb
//! sigma_n = 0.01
//! iterations = 50
//! repetitions = 15
//! seed = 1
//! output = branin.csv
//! ```
//!
//! Relative paths (`output`, `dataset_mean(...)`) are resolved against the
//! directory holding the configuration file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rmes_core::{AcquisitionKind, Domain, OptimConfig, SamplerConfig};

use crate::error::{BenchError, Result};
use crate::objective::ObjectiveKind;

/// How kernel hyperparameters are refreshed during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperparameterPolicy {
    /// MLE re-fit before every acquisition, σ_n² pinned to the configured noise.
    MleEveryIteration,
    /// Keep the initial guess for the whole run.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub objective: ObjectiveKind,
    /// Overrides the objective's default box.
    pub domain: Option<Domain>,
    pub acquisitions: Vec<AcquisitionKind>,
    pub sigma_n: f64,
    pub iterations: usize,
    pub repetitions: usize,
    pub init_points: usize,
    pub max_value_count: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub hyperparameters: HyperparameterPolicy,
    pub ucb_beta: f64,
    pub optimizer: OptimConfig,
    pub sampler: SamplerConfig,
    /// Wall-clock timings make the CSV non-reproducible, so they are off
    /// unless asked for (the column is then written as 0).
    pub record_wall_time: bool,
}

impl BenchmarkConfig {
    /// Defaults follow the usual desk-scale protocol (2 initial points, 5 max-value
    /// samples, 15 repetitions).
    pub fn new(objective: ObjectiveKind) -> Self {
        Self {
            objective,
            domain: None,
            acquisitions: AcquisitionKind::ALL.to_vec(),
            sigma_n: 0.01,
            iterations: 50,
            repetitions: 15,
            init_points: 2,
            max_value_count: 5,
            seed: 0,
            output: None,
            hyperparameters: HyperparameterPolicy::MleEveryIteration,
            ucb_beta: rmes_core::acquisition::DEFAULT_UCB_BETA,
            optimizer: OptimConfig::default(),
            sampler: SamplerConfig::default(),
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.init_points == 0 {
            return bad("init_points must be at least 1");
        }
        if self.max_value_count == 0 {
            return bad("max_value_count must be at least 1");
        }
        if !(self.sigma_n >= 0.0 && self.sigma_n.is_finite()) {
            return bad("sigma_n must be a finite number >= 0");
        }
        if self.acquisitions.is_empty() {
            return bad("at least one acquisition is required");
        }
        if !(self.ucb_beta >= 0.0) {
            return bad("ucb_beta must be >= 0");
        }
        self.optimizer.validate()?;
        if self.sampler.feature_count == 0 || self.sampler.restarts == 0 || self.sampler.steps == 0 {
            return bad("sampler budgets must be positive");
        }
        if let (Some(d), Some(default)) = (&self.domain, self.objective.default_domain()) {
            if d.dim() != default.dim() && !matches!(self.objective, ObjectiveKind::GpSample { .. }) {
                return bad("domain dimension does not match the objective");
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses configuration text; relative paths are taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| BenchError::parse(line, format!("expected `key = value`, found `{content}`")))?;
            let key = key.trim().to_string();
            if !seen.insert(key.clone()) {
                return Err(BenchError::parse(line, format!("duplicate key `{key}`")));
            }
            entries.push((line, key, value.trim().to_string()));
        }
        let objective_line = entries
            .iter()
            .find(|e| e.1 == "objective")
            .ok_or_else(|| BenchError::Config("missing required key `objective`".into()))?;
        let mut config = Self::new(parse_objective(&objective_line.2, base).map_err(|m| BenchError::parse(objective_line.0, m))?);

        let mut lower = None;
        let mut upper = None;
        for (line, key, value) in &entries {
            let at = |m: String| BenchError::parse(*line, m);
            match key.as_str() {
                "objective" => {}
                "lower" => lower = Some((*line, parse_list(value).map_err(at)?)),
                "upper" => upper = Some((*line, parse_list(value).map_err(at)?)),
                "acquisitions" => {
                    config.acquisitions = value
                        .split(',')
                        .map(|s| s.trim().parse::<AcquisitionKind>().map_err(|e| at(e.to_string())))
                        .collect::<Result<_>>()?;
                }
                "sigma_n" => config.sigma_n = parse_num(value).map_err(at)?,
                "iterations" => config.iterations = parse_num(value).map_err(at)?,
                "repetitions" => config.repetitions = parse_num(value).map_err(at)?,
                "init_points" => config.init_points = parse_num(value).map_err(at)?,
                "max_value_count" => config.max_value_count = parse_num(value).map_err(at)?,
                "nu_samples" => config.optimizer.nu_samples = parse_num(value).map_err(at)?,
                "rerank_nu_samples" => config.optimizer.rerank_nu_samples = parse_num(value).map_err(at)?,
                "optimizer_restarts" => config.optimizer.restarts = parse_num(value).map_err(at)?,
                "optimizer_steps" => config.optimizer.steps = parse_num(value).map_err(at)?,
                "optimizer_scan_points" => config.optimizer.scan_points = parse_num(value).map_err(at)?,
                "optimizer_step_size" => config.optimizer.step_size = parse_num(value).map_err(at)?,
                "feature_count" => config.sampler.feature_count = parse_num(value).map_err(at)?,
                "sampler_restarts" => config.sampler.restarts = parse_num(value).map_err(at)?,
                "sampler_steps" => config.sampler.steps = parse_num(value).map_err(at)?,
                "sampler_scan_points" => config.sampler.scan_points = parse_num(value).map_err(at)?,
                "ucb_beta" => config.ucb_beta = parse_num(value).map_err(at)?,
                "seed" => config.seed = parse_num(value).map_err(at)?,
                "output" => config.output = Some(resolve(base, value)),
                "hyperparameters" => {
                    config.hyperparameters = match value.as_str() {
                        "mle" => HyperparameterPolicy::MleEveryIteration,
                        "fixed" => HyperparameterPolicy::Fixed,
                        other => return Err(at(format!("hyperparameters must be `mle` or `fixed`, found `{other}`"))),
                    }
                }
                "record_wall_time" => config.record_wall_time = parse_num(value).map_err(at)?,
                other => return Err(at(format!("unknown key `{other}`"))),
            }
        }
        match (lower, upper) {
            (Some((_, lo)), Some((line, hi))) => {
                config.domain = Some(Domain::new(lo, hi).map_err(|e| BenchError::parse(line, e.to_string()))?)
            }
            (None, None) => {}
            (Some((line, _)), None) | (None, Some((line, _))) => {
                return Err(BenchError::parse(line, "`lower` and `upper` must be given together"))
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse `{value}` as {}", std::any::type_name::<T>()))
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|v| parse_num(v.trim())).collect()
}

/// `branin`, `eggholder`, `michalewicz2`, `gp_sample(seed, ℓ, σ_s²)`,
/// `dataset_mean(path)` or `external(command)`.
pub fn parse_objective(value: &str, base: &Path) -> std::result::Result<ObjectiveKind, String> {
    let value = value.trim();
    let (name, args) = match value.find('(') {
        Some(open) => {
            if !value.ends_with(')') {
                return Err(format!("unbalanced parentheses in objective `{value}`"));
            }
            (value[..open].trim(), Some(value[open + 1..value.len() - 1].trim()))
        }
        None => (value, None),
    };
    match (name, args) {
        ("branin", None) => Ok(ObjectiveKind::Branin),
        ("eggholder", None) => Ok(ObjectiveKind::Eggholder),
        ("michalewicz2", None) => Ok(ObjectiveKind::Michalewicz2),
        ("gp_sample", Some(a)) => {
            let parts: Vec<&str> = a.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err("gp_sample takes (seed, lengthscale, signal_variance)".into());
            }
            let lengthscale: f64 = parse_num(parts[1])?;
            let signal_variance: f64 = parse_num(parts[2])?;
            if !(lengthscale > 0.0 && signal_variance > 0.0) {
                return Err("gp_sample lengthscale and signal variance must be positive".into());
            }
            Ok(ObjectiveKind::GpSample {
                seed: parse_num(parts[0])?,
                lengthscale,
                signal_variance,
            })
        }
        ("dataset_mean", Some(p)) if !p.is_empty() => Ok(ObjectiveKind::DatasetMean { path: resolve(base, p) }),
        ("external", Some(c)) if !c.is_empty() => Ok(ObjectiveKind::External { command: c.to_string() }),
        _ => Err(format!("unknown objective `{value}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# comment line
objective = gp_sample(7, 0.33, 1)   # trailing comment
acquisitions = rmes, ei
sigma_n = 0.3
iterations = 4
repetitions = 2
init_points = 3
max_value_count = 4
nu_samples = 32
seed = 99
output = out/run.csv
lower = 0, 0
upper = 2, 1
hyperparameters = fixed
";
        let c = BenchmarkConfig::parse(text, Path::new("/tmp/base")).unwrap();
        assert_eq!(
            c.objective,
            ObjectiveKind::GpSample {
                seed: 7,
                lengthscale: 0.33,
                signal_variance: 1.0
            }
        );
        assert_eq!(c.acquisitions, vec![AcquisitionKind::Rmes, AcquisitionKind::Ei]);
        assert_eq!((c.iterations, c.repetitions, c.init_points, c.max_value_count), (4, 2, 3, 4));
        assert_eq!(c.optimizer.nu_samples, 32);
        assert_eq!(c.seed, 99);
        assert_eq!(c.output, Some(PathBuf::from("/tmp/base/out/run.csv")));
        assert_eq!(c.domain.unwrap().upper(), &[2.0, 1.0]);
        assert_eq!(c.hyperparameters, HyperparameterPolicy::Fixed);
    }

    #[test]
    fn defaults_follow_the_protocol() {
        let c = BenchmarkConfig::parse("objective = branin", Path::new(".")).unwrap();
        assert_eq!(c.init_points, 2);
        assert_eq!(c.max_value_count, 5);
        assert_eq!(c.repetitions, 15);
        assert_eq!(c.acquisitions.len(), 4);
        assert!(!c.record_wall_time);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("objective = branin\nsigma_n = abc", "line 2"),
            ("objective = branin\n\nwhatever = 1", "line 3"),
            ("objective = branin\nnot a pair", "line 2"),
            ("objective = rosenbrock", "line 1"),
            ("objective = branin\nacquisitions = rmes, pes", "line 2"),
            ("objective = branin\nseed = 1\nseed = 2", "line 3"),
            ("objective = branin\nlower = 0, 0", "line 2"),
        ];
        for (text, expected) in cases {
            let err = BenchmarkConfig::parse(text, Path::new(".")).unwrap_err().to_string();
            assert!(err.contains(expected), "{text:?}: {err}");
        }
        assert!(BenchmarkConfig::parse("sigma_n = 1", Path::new(".")).is_err());
        assert!(BenchmarkConfig::parse("objective = branin\nrepetitions = 0", Path::new(".")).is_err());
        assert!(BenchmarkConfig::parse("objective = branin\nsigma_n = -1", Path::new(".")).is_err());
    }

    #[test]
    fn objective_syntax() {
        let base = Path::new("/data");
        assert_eq!(
            parse_objective("dataset_mean(ph.grid)", base).unwrap(),
            ObjectiveKind::DatasetMean {
                path: PathBuf::from("/data/ph.grid")
            }
        );
        assert_eq!(
            parse_objective("external(python3 tune.py --folds (20))", base).unwrap(),
            ObjectiveKind::External {
                command: "python3 tune.py --folds (20)".into()
            }
        );
        assert!(parse_objective("gp_sample(1, 0.3)", base).is_err());
        assert!(parse_objective("gp_sample(1, -0.3, 1)", base).is_err());
        assert!(parse_objective("external()", base).is_err());
    }
}
