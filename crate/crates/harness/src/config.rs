//! Experiment configuration: flat `key = value` text with `#` comments.
//! Every key can also be set on the command line, which wins over the file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tsmtl::data::{SyntheticSpec, TaskSizes};
use tsmtl::{DualCoupling, NmseDenominator, Rho1, Variant};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    AirQuality { path: PathBuf, strict: bool },
    Portable(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub rho_grid: Vec<f64>,
    pub repeats: usize,
    pub max_iters: usize,
    pub eval_every: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_points: usize,
    /// Fixed `(λ₁, λ₂, λ₃)` for sweeps; grid search picks them when unset.
    pub lambdas: Option<(f64, f64, f64)>,
    pub variants: Vec<Variant>,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub sigma: f64,
    pub rho1: Rho1<f64>,
    pub dual_coupling: DualCoupling,
    pub nmse_denominator: NmseDenominator,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Track validation nMSE during runs.
    pub validation: bool,
    /// Standardise features with training statistics.
    pub zscore: bool,
    pub serial: bool,
    /// Concurrent runs; 0 lets the thread pool decide.
    pub workers: usize,
    /// Record wall-clock seconds in traces (disable for byte-identical output).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DatasetSource::Synthetic(SyntheticSpec::synth_a()),
            rho_grid: vec![0.001, 0.01, 0.1, 1.0, 10.0, 20.0, 30.0],
            repeats: 10,
            max_iters: 1000,
            eval_every: 1,
            lambda_min: 0.1,
            lambda_max: 1000.0,
            lambda_points: 5,
            lambdas: None,
            variants: Variant::ALL.to_vec(),
            base_seed: 0,
            out_dir: PathBuf::from("out"),
            sigma: 1.0,
            rho1: Rho1::Auto,
            dual_coupling: DualCoupling::Direct,
            nmse_denominator: NmseDenominator::Std,
            train_frac: 0.7,
            val_frac: 0.2,
            validation: true,
            zscore: true,
            serial: false,
            workers: 0,
            timing: true,
        }
    }
}

/// Every recognised key, in the order [`ExperimentConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "source",
    "data_path",
    "strict_hours",
    "features",
    "tasks",
    "n",
    "noise_std",
    "row_sparsity",
    "jump_sparsity",
    "data_seed",
    "rho_grid",
    "repeats",
    "max_iters",
    "eval_every",
    "lambda_min",
    "lambda_max",
    "lambda_points",
    "lambda1",
    "lambda2",
    "lambda3",
    "variants",
    "seed",
    "out_dir",
    "sigma",
    "rho1",
    "dual_coupling",
    "nmse_denominator",
    "train_frac",
    "val_frac",
    "validation",
    "zscore",
    "serial",
    "workers",
    "timing",
];

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("`{key} = {value}`: {why}"))
}

fn num<V: std::str::FromStr>(key: &str, value: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    value.trim().parse::<V>().map_err(|e| bad(key, value, e))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn list<V: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<V>>
where
    V::Err: std::fmt::Display,
{
    value
        .split([',', ' '])
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s))
        .collect()
}

/// Keys that only make sense together are collected first and resolved once
/// the whole configuration has been read.
#[derive(Debug, Default, Clone)]
struct Pending {
    source: Option<String>,
    data_path: Option<PathBuf>,
    strict_hours: Option<bool>,
    lambda: [Option<f64>; 3],
}

#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    config: ExperimentConfig,
    pending: Pending,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self {
            config: ExperimentConfig::default(),
            pending: Pending::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let mut b = Self::new();
        b.apply_text(&text)?;
        Ok(b)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!(
                    "line {}: expected `key = value`, found `{line}`",
                    i + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn synthetic(&mut self) -> &mut SyntheticSpec {
        if !matches!(self.config.source, DatasetSource::Synthetic(_)) {
            self.config.source = DatasetSource::Synthetic(SyntheticSpec::synth_a());
        }
        match &mut self.config.source {
            DatasetSource::Synthetic(spec) => spec,
            _ => unreachable!(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let key = key.as_str();
        let c = &mut self.config;
        match key {
            "source" => self.pending.source = Some(value.trim().to_ascii_lowercase()),
            "data_path" => self.pending.data_path = Some(PathBuf::from(value.trim())),
            "strict_hours" => self.pending.strict_hours = Some(boolean(key, value)?),
            "features" => self.synthetic().features = num(key, value)?,
            "tasks" => self.synthetic().tasks = num(key, value)?,
            "n" => {
                let sizes: Vec<usize> = list(key, value)?;
                self.synthetic().sizes = match sizes.as_slice() {
                    [n] => TaskSizes::Uniform(*n),
                    _ => TaskSizes::PerTask(sizes),
                };
            }
            "noise_std" => self.synthetic().noise_std = num(key, value)?,
            "row_sparsity" => self.synthetic().row_sparsity = num(key, value)?,
            "jump_sparsity" => self.synthetic().jump_sparsity = num(key, value)?,
            "data_seed" => self.synthetic().seed = num(key, value)?,
            "rho_grid" => c.rho_grid = list(key, value)?,
            "repeats" => c.repeats = num(key, value)?,
            "max_iters" => c.max_iters = num(key, value)?,
            "eval_every" => c.eval_every = num(key, value)?,
            "lambda_min" => c.lambda_min = num(key, value)?,
            "lambda_max" => c.lambda_max = num(key, value)?,
            "lambda_points" => c.lambda_points = num(key, value)?,
            "lambda1" => self.pending.lambda[0] = Some(num(key, value)?),
            "lambda2" => self.pending.lambda[1] = Some(num(key, value)?),
            "lambda3" => self.pending.lambda[2] = Some(num(key, value)?),
            "variants" => {
                c.variants = value
                    .split([',', ' '])
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Variant>().map_err(|e| bad(key, value, e)))
                    .collect::<Result<_>>()?
            }
            "seed" => c.base_seed = num(key, value)?,
            "out_dir" => c.out_dir = PathBuf::from(value.trim()),
            "sigma" => c.sigma = num(key, value)?,
            "rho1" => {
                c.rho1 = if value.trim().eq_ignore_ascii_case("auto") {
                    Rho1::Auto
                } else {
                    Rho1::Fixed(num(key, value)?)
                }
            }
            "dual_coupling" => c.dual_coupling = value.parse().map_err(|e| bad(key, value, e))?,
            "nmse_denominator" => {
                c.nmse_denominator = value.parse().map_err(|e| bad(key, value, e))?
            }
            "train_frac" => c.train_frac = num(key, value)?,
            "val_frac" => c.val_frac = num(key, value)?,
            "validation" => c.validation = boolean(key, value)?,
            "zscore" => c.zscore = boolean(key, value)?,
            "serial" => c.serial = boolean(key, value)?,
            "workers" => c.workers = num(key, value)?,
            "timing" => c.timing = boolean(key, value)?,
            other => return Err(HarnessError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn build(self) -> Result<ExperimentConfig> {
        let Self {
            mut config,
            pending,
        } = self;
        if let Some(source) = pending.source.as_deref() {
            config.source = match source {
                "synthetic" => match config.source {
                    DatasetSource::Synthetic(spec) => DatasetSource::Synthetic(spec),
                    _ => DatasetSource::Synthetic(SyntheticSpec::synth_a()),
                },
                "air_quality" | "air-quality" | "airquality" => DatasetSource::AirQuality {
                    path: pending.data_path.clone().ok_or_else(|| {
                        HarnessError::Config("source = air-quality needs data_path".into())
                    })?,
                    strict: pending.strict_hours.unwrap_or(true),
                },
                "portable" => {
                    DatasetSource::Portable(pending.data_path.clone().ok_or_else(|| {
                        HarnessError::Config("source = portable needs data_path".into())
                    })?)
                }
                other => return Err(HarnessError::Config(format!("unknown source `{other}`"))),
            };
        }
        config.lambdas = match pending.lambda {
            [None, None, None] => None,
            [Some(a), Some(b), Some(c)] => Some((a, b, c)),
            _ => {
                return Err(HarnessError::Config(
                    "set all of lambda1, lambda2, lambda3 or none of them".into(),
                ))
            }
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.rho_grid.is_empty() {
            return fail("rho_grid is empty".into());
        }
        if let Some(r) = self
            .rho_grid
            .iter()
            .find(|r| !(**r > 0.0) || !r.is_finite())
        {
            return fail(format!("rho values must be positive, got {r}"));
        }
        if self.variants.is_empty() {
            return fail("no solver variants selected".into());
        }
        if self.repeats == 0 || self.max_iters == 0 || self.eval_every == 0 {
            return fail("repeats, max_iters and eval_every must be >= 1".into());
        }
        if self.lambda_points == 0 || !(self.lambda_min > 0.0) || self.lambda_max < self.lambda_min
        {
            return fail("lambda grid needs 0 < lambda_min <= lambda_max and >= 1 point".into());
        }
        if let Some((a, b, c)) = self.lambdas {
            if [a, b, c].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return fail("lambdas must be finite and >= 0".into());
            }
        }
        if !(self.sigma > 0.0) {
            return fail("sigma must be > 0".into());
        }
        if let Rho1::Fixed(r) = self.rho1 {
            if !(r > 0.0) {
                return fail("rho1 must be > 0 or auto".into());
            }
        }
        for (name, f) in [("train_frac", self.train_frac), ("val_frac", self.val_frac)] {
            if !(f > 0.0 && f < 1.0) {
                return fail(format!("{name} must lie in (0, 1)"));
            }
        }
        if let DatasetSource::Synthetic(spec) = &self.source {
            spec.validate()
                .map_err(|e| HarnessError::Config(format!("synthetic dataset: {e}")))?;
        }
        Ok(())
    }

    /// Log-spaced values from `lambda_min` to `lambda_max` inclusive.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let n = self.lambda_points;
        if n == 1 {
            return vec![self.lambda_min];
        }
        let (lo, hi) = (self.lambda_min.log10(), self.lambda_max.log10());
        (0..n)
            .map(|i| {
                let v = 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64);
                // Snap round decades (10^-1, 10^0, ...) that powf misses by an ulp.
                let r = format!("{v:.12e}").parse::<f64>().unwrap();
                if (r - v).abs() <= 1e-12 * v {
                    r
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn seed_for_repeat(&self, repeat: usize) -> u64 {
        self.base_seed + repeat as u64
    }

    /// Configuration as `key = value` text that [`ConfigBuilder`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        match &self.source {
            DatasetSource::Synthetic(spec) => {
                let sizes = spec.task_sizes();
                let n = match &spec.sizes {
                    TaskSizes::Uniform(n) => n.to_string(),
                    TaskSizes::PerTask(_) => sizes
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join(", "),
                };
                let _ = writeln!(s, "source = synthetic");
                let _ = writeln!(s, "features = {}", spec.features);
                let _ = writeln!(s, "tasks = {}", spec.tasks);
                let _ = writeln!(s, "n = {n}");
                let _ = writeln!(s, "noise_std = {}", spec.noise_std);
                let _ = writeln!(s, "row_sparsity = {}", spec.row_sparsity);
                let _ = writeln!(s, "jump_sparsity = {}", spec.jump_sparsity);
                let _ = writeln!(s, "data_seed = {}", spec.seed);
            }
            DatasetSource::AirQuality { path, strict } => {
                let _ = writeln!(s, "source = air-quality");
                let _ = writeln!(s, "data_path = {}", path.display());
                let _ = writeln!(s, "strict_hours = {strict}");
            }
            DatasetSource::Portable(path) => {
                let _ = writeln!(s, "source = portable");
                let _ = writeln!(s, "data_path = {}", path.display());
            }
        }
        let _ = writeln!(s, "rho_grid = {}", join(&self.rho_grid));
        let _ = writeln!(s, "repeats = {}", self.repeats);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "eval_every = {}", self.eval_every);
        let _ = writeln!(s, "lambda_min = {}", self.lambda_min);
        let _ = writeln!(s, "lambda_max = {}", self.lambda_max);
        let _ = writeln!(s, "lambda_points = {}", self.lambda_points);
        if let Some((a, b, c)) = self.lambdas {
            let _ = writeln!(s, "lambda1 = {a}\nlambda2 = {b}\nlambda3 = {c}");
        }
        let variants: Vec<&str> = self.variants.iter().map(|v| v.as_str()).collect();
        let _ = writeln!(s, "variants = {}", variants.join(", "));
        let _ = writeln!(s, "seed = {}", self.base_seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "sigma = {}", self.sigma);
        match self.rho1 {
            Rho1::Auto => {
                let _ = writeln!(s, "rho1 = auto");
            }
            Rho1::Fixed(r) => {
                let _ = writeln!(s, "rho1 = {r}");
            }
        }
        let _ = writeln!(s, "dual_coupling = {}", self.dual_coupling);
        let _ = writeln!(s, "nmse_denominator = {}", self.nmse_denominator);
        let _ = writeln!(s, "train_frac = {}", self.train_frac);
        let _ = writeln!(s, "val_frac = {}", self.val_frac);
        let _ = writeln!(s, "validation = {}", self.validation);
        let _ = writeln!(s, "zscore = {}", self.zscore);
        let _ = writeln!(s, "serial = {}", self.serial);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "timing = {}", self.timing);
        s
    }
}
