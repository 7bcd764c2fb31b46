//! Grid search and step-size sweeps.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tsmtl::data::{
    apply_scaler, fit_scaler, generate_synthetic, load_air_quality, read_portable, split,
};
use tsmtl::{
    run, Execution, Hyperparams64, ProblemData64, RunOptions, TraceRecord64, Variant,
    WeightMatrix64,
};

use crate::config::{DatasetSource, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::io::{emit_summary_csv, emit_trace_csv, write_file};
use crate::summary::{summarize, SummaryRow};

pub const GRIDSEARCH_FILE: &str = "gridsearch.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const TRACE_DIR: &str = "traces";

pub fn load_dataset(config: &ExperimentConfig) -> Result<ProblemData64> {
    Ok(match &config.source {
        DatasetSource::Synthetic(spec) => generate_synthetic::<f64>(spec)?.0,
        DatasetSource::AirQuality { path, strict } => {
            load_air_quality::<f64>(path, *strict)
                .map_err(|e| with_path(e, path))?
                .data
        }
        DatasetSource::Portable(path) => {
            read_portable::<f64>(path)
                .map_err(|e| with_path(e, path))?
                .data
        }
    })
}

fn with_path(e: tsmtl::Error, path: &Path) -> HarnessError {
    match e {
        tsmtl::Error::Io(source) => HarnessError::Io {
            path: path.into(),
            source,
        },
        other => HarnessError::Malformed {
            path: path.into(),
            message: other.to_string(),
        },
    }
}

/// Training and validation parts of one seeded split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: ProblemData64,
    pub validation: ProblemData64,
}

/// Splits with `seed` and, if configured, z-scores both parts with the
/// training statistics.
pub fn prepare(data: &ProblemData64, config: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let parts = split(data, config.train_frac, config.val_frac, seed)?;
    if !config.zscore {
        return Ok(Prepared {
            train: parts.train,
            validation: parts.validation,
        });
    }
    let scaler = fit_scaler(&parts.train)?;
    Ok(Prepared {
        train: apply_scaler(&parts.train, &scaler)?,
        validation: apply_scaler(&parts.validation, &scaler)?,
    })
}

fn hyper(config: &ExperimentConfig, lambdas: (f64, f64, f64), rho: f64) -> Hyperparams64 {
    Hyperparams64 {
        sigma: config.sigma,
        rho,
        rho1: config.rho1,
        dual_coupling: config.dual_coupling,
        max_iters: config.max_iters,
        eval_every: config.eval_every,
        ..Hyperparams64::new(lambdas.0, lambdas.1, lambdas.2)
    }
}

fn options(config: &ExperimentConfig) -> RunOptions {
    RunOptions {
        execution: Execution::Serial,
        nmse_denominator: config.nmse_denominator,
        timing: config.timing,
    }
}

/// Runs `f` over `items` on a pool of `config.workers` threads, or in order
/// on the calling thread when `config.serial`. Output order matches input.
fn map_runs<I, O, F>(config: &ExperimentConfig, items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    if config.serial {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Validation nMSE of the last iterate; `None` if the run diverged.
    pub val_nmse: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub chosen: (f64, f64, f64),
    pub table: Vec<GridRow>,
}

/// Lowest validation nMSE wins; exact ties go to the lexicographically
/// larger `(λ₁, λ₂, λ₃)`.
pub fn select_best(table: &[GridRow]) -> Result<(f64, f64, f64)> {
    let mut best: Option<(&GridRow, f64)> = None;
    for row in table {
        let Some(score) = row.val_nmse.filter(|v| v.is_finite() && !row.diverged) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((b, bs)) => {
                score < bs
                    || (score == bs
                        && (row.lambda1, row.lambda2, row.lambda3)
                            > (b.lambda1, b.lambda2, b.lambda3))
            }
        };
        if better {
            best = Some((row, score));
        }
    }
    best.map(|(r, _)| (r.lambda1, r.lambda2, r.lambda3))
        .ok_or(HarnessError::AllDiverged)
}

/// Multi-block at `ρ = 1` over the full λ grid, on the split seeded with the
/// base seed. Writes `gridsearch.csv` into the output directory.
pub fn grid_search(config: &ExperimentConfig) -> Result<GridSearch> {
    let data = load_dataset(config)?;
    let prepared = prepare(&data, config, config.base_seed)?;
    let weights = WeightMatrix64::build(prepared.train.num_tasks(), config.sigma)?;
    let grid = config.lambda_grid();
    let mut combos = Vec::with_capacity(grid.len().pow(3));
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                combos.push((a, b, c));
            }
        }
    }
    let table = map_runs(config, &combos, |&lambdas| {
        let out = run(
            &prepared.train,
            &hyper(config, lambdas, 1.0),
            &weights,
            Variant::MultiBlock,
            Some(&prepared.validation),
            options(config),
        )?;
        let last = out.trace.last().and_then(|r| r.val_nmse);
        Ok(GridRow {
            lambda1: lambdas.0,
            lambda2: lambdas.1,
            lambda3: lambdas.2,
            val_nmse: if out.diverged { None } else { last },
            diverged: out.diverged,
        })
    })?;
    write_file(
        &config.out_dir.join(GRIDSEARCH_FILE),
        &gridsearch_to_string(&table),
    )?;
    let chosen = select_best(&table)?;
    Ok(GridSearch { chosen, table })
}

pub fn gridsearch_to_string(table: &[GridRow]) -> String {
    let mut s = String::from("lambda1,lambda2,lambda3,val_nmse,diverged\n");
    for r in table {
        let v = r.val_nmse.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{v},{}\n",
            r.lambda1, r.lambda2, r.lambda3, r.diverged
        ));
    }
    s
}

pub fn parse_gridsearch(path: &Path) -> Result<Vec<GridRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(HarnessError::csv(path))?;
    let bad = |m: String| HarnessError::Malformed {
        path: path.into(),
        message: m,
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(HarnessError::csv(path))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("bad value in column {i}: {rec:?}")))
        };
        out.push(GridRow {
            lambda1: num(0)?,
            lambda2: num(1)?,
            lambda3: num(2)?,
            val_nmse: match rec.get(3) {
                Some("") => None,
                _ => Some(num(3)?),
            },
            diverged: rec
                .get(4)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("bad diverged flag: {rec:?}")))?,
        });
    }
    Ok(out)
}

pub fn trace_file_name(variant: Variant, rho: f64, repeat: usize) -> String {
    format!("trace_{}_rho{}_rep{}.csv", variant.as_str(), rho, repeat)
}

pub fn trace_path(out_dir: &Path, variant: Variant, rho: f64, repeat: usize) -> PathBuf {
    out_dir
        .join(TRACE_DIR)
        .join(trace_file_name(variant, rho, repeat))
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub variant: Variant,
    pub rho: f64,
    pub repeat: usize,
    pub trace: Vec<TraceRecord64>,
    pub diverged: bool,
    pub trace_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub lambdas: (f64, f64, f64),
    /// Ordered by variant, then ρ, then repeat, as configured.
    pub runs: Vec<RunRecord>,
    pub rows: Vec<SummaryRow>,
}

/// Every `(variant, ρ, repeat)` run. Uses the configured λ's or, if none are
/// set, the result of [`grid_search`]. Writes one trace per run,
/// `summary.csv` and `config.txt` into the output directory.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Sweep> {
    config.validate()?;
    let lambdas = match config.lambdas {
        Some(l) => l,
        None => grid_search(config)?.chosen,
    };
    let data = load_dataset(config)?;
    let prepared = (0..config.repeats)
        .map(|r| prepare(&data, config, config.seed_for_repeat(r)))
        .collect::<Result<Vec<_>>>()?;
    let weights = WeightMatrix64::build(data.num_tasks(), config.sigma)?;

    let mut jobs = Vec::new();
    for &variant in &config.variants {
        for &rho in &config.rho_grid {
            for repeat in 0..config.repeats {
                jobs.push((variant, rho, repeat));
            }
        }
    }
    let runs = map_runs(config, &jobs, |&(variant, rho, repeat)| {
        let p = &prepared[repeat];
        let out = run(
            &p.train,
            &hyper(config, lambdas, rho),
            &weights,
            variant,
            config.validation.then_some(&p.validation),
            options(config),
        )?;
        let path = trace_path(&config.out_dir, variant, rho, repeat);
        emit_trace_csv(&out.trace, &path)?;
        Ok(RunRecord {
            variant,
            rho,
            repeat,
            trace: out.trace,
            diverged: out.diverged,
            trace_path: path,
        })
    })?;

    let rows: Vec<SummaryRow> = runs
        .iter()
        .map(|r| summarize(r.variant, r.rho, r.repeat, &r.trace, r.diverged))
        .collect();
    emit_summary_csv(&rows, &config.out_dir.join(SUMMARY_FILE))?;
    let resolved = ExperimentConfig {
        lambdas: Some(lambdas),
        ..config.clone()
    };
    write_file(&config.out_dir.join(CONFIG_FILE), &resolved.to_text())?;
    Ok(Sweep {
        lambdas,
        runs,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: (f64, f64, f64), v: Option<f64>) -> GridRow {
        GridRow {
            lambda1: l.0,
            lambda2: l.1,
            lambda3: l.2,
            val_nmse: v,
            diverged: v.is_none(),
        }
    }

    #[test]
    fn single_point_grid() {
        assert_eq!(
            select_best(&[row((1.0, 2.0, 3.0), Some(0.4))]).unwrap(),
            (1.0, 2.0, 3.0)
        );
    }

    #[test]
    fn diverged_runs_excluded() {
        let t = [
            row((0.1, 0.1, 0.1), None),
            row((10.0, 10.0, 10.0), Some(0.9)),
        ];
        assert_eq!(select_best(&t).unwrap(), (10.0, 10.0, 10.0));
        let t = [row((0.1, 0.1, 0.1), None)];
        assert!(matches!(select_best(&t), Err(HarnessError::AllDiverged)));
    }

    #[test]
    fn ties_prefer_stronger_regularisation() {
        let t = [
            row((1.0, 10.0, 0.1), Some(0.5)),
            row((10.0, 0.1, 0.1), Some(0.5)),
            row((1.0, 100.0, 100.0), Some(0.5)),
            row((0.1, 0.1, 0.1), Some(0.7)),
        ];
        assert_eq!(select_best(&t).unwrap(), (10.0, 0.1, 0.1));
    }

    #[test]
    fn trace_names() {
        assert_eq!(
            trace_file_name(Variant::TwoBlock, 0.001, 3),
            "trace_two_block_rho0.001_rep3.csv"
        );
    }
}
