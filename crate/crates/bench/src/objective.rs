//! Benchmark objectives: analytic test functions, GP samples, gridded
//! datasets and external black boxes.
//!
//! An [`Objective`] only exposes its domain and its noiseless value. Ground
//! truth (f*, x*) lives in [`GroundTruth`], which the metric code receives
//! separately; the BO decision path never sees it.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rmes_core::{
    draw_posterior_function, mle_fit, Dataset, Domain, KernelHyperparams, MleConfig, PosteriorFunctionSample,
    PosteriorModel,
};

use crate::error::{BenchError, Result};

/// Per-axis resolution of the grid used to estimate the mean shift.
pub const SHIFT_GRID: usize = 256;
/// Per-axis resolution of the ground-truth scan.
pub const TRUTH_GRID: usize = 512;

/// What to optimize.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    Branin,
    Eggholder,
    Michalewicz2,
    /// A draw from a zero-mean GP prior with an isotropic SE kernel.
    GpSample {
        seed: u64,
        lengthscale: f64,
        signal_variance: f64,
    },
    /// Posterior mean of a GP fitted to a gridded dataset.
    DatasetMean { path: PathBuf },
    /// A user-supplied program speaking the line protocol.
    External { command: String },
}

impl ObjectiveKind {
    pub fn name(&self) -> String {
        match self {
            Self::Branin => "branin".into(),
            Self::Eggholder => "eggholder".into(),
            Self::Michalewicz2 => "michalewicz2".into(),
            Self::GpSample {
                seed,
                lengthscale,
                signal_variance,
            } => format!("gp_sample({seed}, {lengthscale}, {signal_variance})"),
            Self::DatasetMean { path } => format!("dataset_mean({})", path.display()),
            Self::External { command } => format!("external({command})"),
        }
    }

    /// The domain used when the configuration does not override it.
    pub fn default_domain(&self) -> Option<Domain> {
        let d = match self {
            Self::Branin => Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0]),
            Self::Eggholder => Domain::new(vec![-512.0, -512.0], vec![512.0, 512.0]),
            Self::Michalewicz2 => Domain::new(vec![0.0, 0.0], vec![PI, PI]),
            Self::GpSample { .. } => Domain::unit(2),
            Self::DatasetMean { .. } | Self::External { .. } => return None,
        };
        Some(d.expect("static domains are valid"))
    }
}

/// Canonical Branin-Hoo (to be minimized).
pub fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// Canonical eggholder (to be minimized).
pub fn eggholder(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    -(x2 + 47.0) * (x1 / 2.0 + x2 + 47.0).abs().sqrt().sin() - x1 * (x1 - (x2 + 47.0)).abs().sqrt().sin()
}

/// Michalewicz with steepness m = 10 (to be minimized), any dimension.
pub fn michalewicz(x: &[f64]) -> f64 {
    -x.iter()
        .enumerate()
        .map(|(i, xi)| xi.sin() * ((i + 1) as f64 * xi * xi / PI).sin().powi(20))
        .sum::<f64>()
}

/// Grid file contents: `rows cols x_min x_max y_min y_max` then
/// `rows × cols` values, row-major. Rows run along the second coordinate,
/// columns along the first; values sit at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub rows: usize,
    pub cols: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub values: Vec<f64>,
}

impl GridData {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| BenchError::parse(1, "empty grid file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(BenchError::parse(
                hline,
                format!("header needs `rows cols x_min x_max y_min y_max`, found {} fields", fields.len()),
            ));
        }
        let rows: usize = fields[0]
            .parse()
            .map_err(|_| BenchError::parse(hline, format!("bad row count `{}`", fields[0])))?;
        let cols: usize = fields[1]
            .parse()
            .map_err(|_| BenchError::parse(hline, format!("bad column count `{}`", fields[1])))?;
        let mut bounds = [0.0; 4];
        for (b, f) in bounds.iter_mut().zip(&fields[2..]) {
            *b = f
                .parse()
                .map_err(|_| BenchError::parse(hline, format!("bad bound `{f}`")))?;
        }
        if rows == 0 || cols == 0 {
            return Err(BenchError::parse(hline, "grid must have at least one row and column"));
        }
        if !(bounds[0] < bounds[1]) || !(bounds[2] < bounds[3]) {
            return Err(BenchError::parse(hline, "grid bounds must satisfy min < max"));
        }
        let mut values = Vec::with_capacity(rows * cols);
        let mut last_line = hline;
        for (n, line) in lines {
            last_line = n;
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| BenchError::parse(n, format!("bad value `{tok}`")))?;
                if !v.is_finite() {
                    return Err(BenchError::parse(n, format!("non-finite value `{tok}`")));
                }
                values.push(v);
            }
        }
        if values.len() != rows * cols {
            return Err(BenchError::parse(
                last_line,
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        Ok(Self {
            rows,
            cols,
            x_range: (bounds[0], bounds[1]),
            y_range: (bounds[2], bounds[3]),
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn domain(&self) -> Domain {
        Domain::new(
            vec![self.x_range.0, self.y_range.0],
            vec![self.x_range.1, self.y_range.1],
        )
        .expect("validated bounds")
    }

    /// Cell-centre location of value `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> Vec<f64> {
        let dx = (self.x_range.1 - self.x_range.0) / self.cols as f64;
        let dy = (self.y_range.1 - self.y_range.0) / self.rows as f64;
        vec![
            self.x_range.0 + (col as f64 + 0.5) * dx,
            self.y_range.0 + (row as f64 + 0.5) * dy,
        ]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// GP-mean surrogate of a gridded dataset: the data are centred, a GP is
/// fitted by MLE (noise learned), and the objective is centre + posterior mean.
pub fn fit_dataset_surrogate(grid: &GridData, seed: u64) -> Result<(PosteriorModel, f64)> {
    let mut inputs = Vec::with_capacity(grid.values.len());
    let mut outputs = Vec::with_capacity(grid.values.len());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            inputs.push(grid.cell_center(r, c));
            outputs.push(grid.value(r, c));
        }
    }
    let centre = outputs.iter().sum::<f64>() / outputs.len() as f64;
    outputs.iter_mut().for_each(|y| *y -= centre);
    let data = Dataset::new(inputs, outputs)?;
    let domain = grid.domain();
    let variance = data.outputs().iter().map(|y| y * y).sum::<f64>() / data.len() as f64;
    let init = KernelHyperparams::new(
        domain.widths().iter().map(|w| 0.2 * w).collect(),
        variance.max(1e-6),
        (0.01 * variance).max(1e-8),
    )?;
    // a full grid is a few hundred points; a short search suffices
    let mut config = MleConfig::new(&domain, seed);
    config.starts = 3;
    config.steps_per_start = 25;
    let hyper = mle_fit(&data, &init, &config)?;
    Ok((PosteriorModel::fit(data, hyper)?, centre))
}

enum Source {
    Analytic(fn(&[f64]) -> f64),
    Sample(PosteriorFunctionSample),
    Surrogate { model: PosteriorModel, centre: f64 },
    External(Mutex<ExternalProcess>),
}

/// A noiseless, negated (for minimization benchmarks) and mean-shifted
/// objective over a box.
pub struct Objective {
    kind: ObjectiveKind,
    domain: Domain,
    source: Source,
    /// Subtracted from the raw (negated) value.
    mean_shift: f64,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("mean_shift", &self.mean_shift)
            .finish()
    }
}

impl Objective {
    /// Builds the objective. `domain` overrides the default box; it is
    /// required for external objectives.
    pub fn new(kind: ObjectiveKind, domain: Option<Domain>) -> Result<Self> {
        let (source, default_domain) = match &kind {
            ObjectiveKind::Branin => (Source::Analytic(|x| -branin(x)), kind.default_domain()),
            ObjectiveKind::Eggholder => (Source::Analytic(|x| -eggholder(x)), kind.default_domain()),
            ObjectiveKind::Michalewicz2 => (Source::Analytic(|x| -michalewicz(x)), kind.default_domain()),
            ObjectiveKind::GpSample {
                seed,
                lengthscale,
                signal_variance,
            } => {
                let d = domain.as_ref().map_or(2, Domain::dim);
                let hyper = KernelHyperparams::isotropic(d, *lengthscale, *signal_variance, 0.0)?;
                let prior = PosteriorModel::fit(Dataset::empty(), hyper)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let sample = draw_posterior_function(&prior, 2048, &mut rng)?;
                (Source::Sample(sample), kind.default_domain())
            }
            ObjectiveKind::DatasetMean { path } => {
                let grid = GridData::load(path)?;
                let (model, centre) = fit_dataset_surrogate(&grid, 0)?;
                (Source::Surrogate { model, centre }, Some(grid.domain()))
            }
            ObjectiveKind::External { command } => {
                (Source::External(Mutex::new(ExternalProcess::spawn(command)?)), None)
            }
        };
        let domain = domain
            .or(default_domain)
            .ok_or_else(|| BenchError::Config(format!("objective {} needs explicit domain bounds", kind.name())))?;
        let mut objective = Self {
            kind,
            domain,
            source,
            mean_shift: 0.0,
        };
        if !matches!(objective.source, Source::External(_)) {
            objective.mean_shift = objective.grid_mean(SHIFT_GRID)?;
        }
        Ok(objective)
    }

    /// Wraps an arbitrary deterministic function; used for tests and the
    /// misconception scenarios. No shift is applied.
    pub fn from_fn(name: &str, domain: Domain, f: fn(&[f64]) -> f64) -> Self {
        Self {
            kind: ObjectiveKind::External {
                command: format!("<fn {name}>"),
            },
            domain,
            source: Source::Analytic(f),
            mean_shift: 0.0,
        }
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn mean_shift(&self) -> f64 {
        self.mean_shift
    }

    /// Whether ground truth can be computed by scanning (false for external
    /// black boxes, whose evaluations are expensive and opaque).
    pub fn supports_truth(&self) -> bool {
        !matches!(self.source, Source::External(_))
    }

    fn raw(&self, x: &[f64]) -> Result<f64> {
        Ok(match &self.source {
            Source::Analytic(f) => f(x),
            Source::Sample(s) => s.evaluate(x),
            Source::Surrogate { model, centre } => centre + model.predict_mean(x)?,
            Source::External(p) => p
                .lock()
                .map_err(|_| BenchError::External("external objective poisoned by an earlier panic".into()))?
                .query(x)?,
        })
    }

    /// Noiseless shifted objective value.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.dim() {
            return Err(rmes_core::Error::DimensionMismatch {
                expected: self.domain.dim(),
                found: x.len(),
            }
            .into());
        }
        Ok(self.raw(x)? - self.mean_shift)
    }

    /// Mean of the current objective over a regular grid of cell centres
    /// (`per_axis` points along each axis, capped at ~2¹⁶ points in total).
    pub fn grid_mean(&self, per_axis: usize) -> Result<f64> {
        let d = self.domain.dim();
        let n = axis_points(per_axis, d);
        let total = n.pow(d as u32);
        let mut sum = 0.0;
        let mut comp = 0.0;
        for idx in 0..total {
            let u = grid_unit_point(idx, n, d);
            let v = self.evaluate(&self.domain.from_unit(&u))?;
            // Kahan summation keeps the shifted mean at round-off level
            let y = v - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        Ok(sum / total as f64)
    }
}

/// Points per axis so that a d-dimensional grid stays near `per_axis²`.
fn axis_points(per_axis: usize, d: usize) -> usize {
    if d <= 2 {
        per_axis
    } else {
        ((per_axis * per_axis) as f64).powf(1.0 / d as f64).round().max(2.0) as usize
    }
}

/// Cell centre `idx` of an `n^d` grid in the unit box, first axis fastest.
fn grid_unit_point(mut idx: usize, n: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let i = idx % n;
            idx /= n;
            (i as f64 + 0.5) / n as f64
        })
        .collect()
}

/// Grid point `idx` of an `n^d` grid including the box faces.
fn closed_grid_unit_point(mut idx: usize, n: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let i = idx % n;
            idx /= n;
            i as f64 / (n - 1) as f64
        })
        .collect()
}

/// True maximum and maximizer of an objective, for metrics only.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub max_value: f64,
    pub maximizer: Vec<f64>,
}

impl GroundTruth {
    /// Dense grid scan (faces included) followed by pattern-search
    /// refinement of the best few grid points.
    pub fn compute(objective: &Objective) -> Result<Self> {
        if !objective.supports_truth() {
            return Err(BenchError::Config(format!(
                "ground truth is unavailable for {}",
                objective.kind().name()
            )));
        }
        let domain = objective.domain();
        let d = domain.dim();
        let n = axis_points(TRUTH_GRID, d);
        let total = n.pow(d as u32);
        let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
        const KEEP: usize = 8;
        for idx in 0..total {
            let u = closed_grid_unit_point(idx, n, d);
            let v = objective.evaluate(&domain.from_unit(&u))?;
            if best.len() < KEEP || v > best[best.len() - 1].0 {
                best.push((v, u));
                best.sort_by(|a, b| b.0.total_cmp(&a.0));
                best.truncate(KEEP);
            }
        }
        let mut truth: Option<GroundTruth> = None;
        for (v, u) in best {
            let (rv, ru) = pattern_search(|p| objective.evaluate(&domain.from_unit(p)), u, v, 1.0 / (n - 1) as f64)?;
            if truth.as_ref().is_none_or(|t| rv > t.max_value) {
                truth = Some(GroundTruth {
                    max_value: rv,
                    maximizer: domain.from_unit(&ru),
                });
            }
        }
        Ok(truth.expect("grid is nonempty"))
    }
}

/// Compass search in the unit box, halving the step down to 1e-13.
fn pattern_search<F>(f: F, mut u: Vec<f64>, mut value: f64, mut step: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    while step > 1e-13 {
        let mut improved = false;
        for i in 0..u.len() {
            for dir in [1.0, -1.0] {
                let mut cand = u.clone();
                cand[i] = (cand[i] + dir * step).clamp(0.0, 1.0);
                if cand[i] == u[i] {
                    continue;
                }
                let v = f(&cand)?;
                if v > value {
                    value = v;
                    u = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((value, u))
}

/// A long-lived child process: one query per line in (space-separated
/// coordinates), one value per line out.
pub struct ExternalProcess {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalProcess {
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BenchError::External(format!("failed to start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            command: command.to_string(),
            child,
            stdin,
            stdout,
        })
    }

    pub fn query(&mut self, x: &[f64]) -> Result<f64> {
        let line = x.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
        let fail = |what: String| BenchError::External(format!("`{}`: {what}", self.command));
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| fail(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| fail(format!("read failed: {e}")))?;
        if n == 0 {
            let status = self
                .child
                .try_wait()
                .ok()
                .flatten()
                .map_or_else(|| "still running".to_string(), |s| s.to_string());
            return Err(fail(format!("closed its output after query `{line}` ({status})")));
        }
        let v: f64 = reply
            .trim()
            .parse()
            .map_err(|_| fail(format!("replied `{}` to query `{line}`", reply.trim())))?;
        if !v.is_finite() {
            return Err(fail(format!("non-finite reply `{}`", reply.trim())));
        }
        Ok(v)
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
