//! Seeded synthetic multi-task data with group-sparse, temporally smooth
//! parameters and a few abrupt jumps.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problem::{ProblemData, Task};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskSizes {
    Uniform(usize),
    PerTask(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub features: usize,
    pub tasks: usize,
    pub sizes: TaskSizes,
    pub noise_std: f64,
    /// Fraction of feature rows of `Θ*` that are identically zero.
    pub row_sparsity: f64,
    /// Fraction of `(active row, t ≥ 1)` positions that carry a jump.
    pub jump_sparsity: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// The small fixed benchmark used throughout the test suites:
    /// 5 features, 4 tasks, 20 rows each, seed 7.
    pub fn synth_a() -> Self {
        Self {
            features: 5,
            tasks: 4,
            sizes: TaskSizes::Uniform(20),
            noise_std: 0.1,
            row_sparsity: 0.4,
            jump_sparsity: 0.1,
            seed: 7,
        }
    }

    pub fn task_sizes(&self) -> Vec<usize> {
        match &self.sizes {
            TaskSizes::Uniform(n) => vec![*n; self.tasks],
            TaskSizes::PerTask(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features == 0 || self.tasks == 0 {
            return Err(Error::InvalidParameter(
                "synthetic spec needs at least one feature and one task".into(),
            ));
        }
        let sizes = self.task_sizes();
        if sizes.len() != self.tasks {
            return Err(Error::InvalidParameter(format!(
                "{} per-task sizes given for {} tasks",
                sizes.len(),
                self.tasks
            )));
        }
        if let Some(t) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::EmptyTask { task: t });
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidParameter(
                "noise_std must be finite and >= 0".into(),
            ));
        }
        for (name, f) in [
            ("row_sparsity", self.row_sparsity),
            ("jump_sparsity", self.jump_sparsity),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }

    /// Number of all-zero rows of `Θ*`.
    pub fn zero_rows(&self) -> usize {
        (self.row_sparsity * self.features as f64).round() as usize
    }

    /// Number of jump positions for `active` nonzero rows.
    pub fn jump_count(&self, active: usize) -> usize {
        (self.jump_sparsity * (active * self.tasks.saturating_sub(1)) as f64).round() as usize
    }
}

/// Ground truth behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth<T: Scalar> {
    /// `p × T` true parameters.
    pub theta: DMatrix<T>,
    /// Indices of the nonzero rows, ascending.
    pub active_rows: Vec<usize>,
    /// `(row, t)`: a step change between tasks `t − 1` and `t`.
    pub jumps: Vec<(usize, usize)>,
}

/// Builds `Θ*` and per-task data:
///
/// * `round(row_sparsity·p)` rows, picked by a seeded shuffle, are zero;
/// * every active row follows `a_j + b_j·sin(2πt/T + φ_j)`;
/// * `round(jump_sparsity·active·(T−1))` seeded `(row, t)` positions add a
///   step of magnitude in `[1, 2)` to that row from task `t` on;
/// * `X_t` is i.i.d. standard normal and `y_t = X_tθ*_t + noise_std·ε`.
pub fn generate_synthetic<T: Scalar>(
    spec: &SyntheticSpec,
) -> Result<(ProblemData<T>, SyntheticTruth<T>)> {
    spec.validate()?;
    let (p, tasks) = (spec.features, spec.tasks);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut rows: Vec<usize> = (0..p).collect();
    rows.shuffle(&mut rng);
    let zero = spec.zero_rows();
    let mut active_rows = rows[zero..].to_vec();
    active_rows.sort_unstable();

    let mut theta = DMatrix::<f64>::zeros(p, tasks);
    for &j in &active_rows {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let level = sign * rng.random_range(0.5..1.5);
        let amplitude = rng.random_range(0.2..0.6);
        let phase = rng.random_range(0.0..2.0 * PI);
        for t in 0..tasks {
            theta[(j, t)] = level + amplitude * (2.0 * PI * t as f64 / tasks as f64 + phase).sin();
        }
    }

    let mut candidates: Vec<(usize, usize)> = active_rows
        .iter()
        .flat_map(|&j| (1..tasks).map(move |t| (j, t)))
        .collect();
    candidates.shuffle(&mut rng);
    let mut jumps = candidates[..spec.jump_count(active_rows.len())].to_vec();
    jumps.sort_unstable();
    for &(j, t0) in &jumps {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let step = sign * rng.random_range(1.0..2.0);
        for t in t0..tasks {
            theta[(j, t)] += step;
        }
    }

    let mut out = Vec::with_capacity(tasks);
    for (t, n) in spec.task_sizes().into_iter().enumerate() {
        let x = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample(StandardNormal));
        let noise = DVector::<f64>::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &x * theta.column(t) + noise * spec.noise_std;
        out.push(Task::new(x.map(T::lit), y.map(T::lit))?);
    }

    Ok((
        ProblemData::new(out)?,
        SyntheticTruth {
            theta: theta.map(T::lit),
            active_rows,
            jumps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_rows_give_zero_targets() {
        let spec = SyntheticSpec {
            noise_std: 0.0,
            row_sparsity: 1.0,
            ..SyntheticSpec::synth_a()
        };
        let (data, truth) = generate_synthetic::<f64>(&spec).unwrap();
        assert!(truth.theta.iter().all(|&v| v == 0.0));
        assert!(truth.active_rows.is_empty());
        assert!(data.tasks().iter().all(|t| t.y.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn seeded_and_deterministic() {
        let spec = SyntheticSpec::synth_a();
        let a = generate_synthetic::<f64>(&spec).unwrap();
        let b = generate_synthetic::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        let other = SyntheticSpec { seed: 8, ..spec };
        assert_ne!(a.0, generate_synthetic::<f64>(&other).unwrap().0);
    }

    #[test]
    fn sparsity_counts_honoured() {
        let spec = SyntheticSpec::synth_a();
        let (data, truth) = generate_synthetic::<f64>(&spec).unwrap();
        assert_eq!(data.num_features(), 5);
        assert_eq!(data.num_tasks(), 4);
        assert_eq!(truth.active_rows.len(), 3);
        assert_eq!(truth.jumps.len(), 1);
        for j in 0..5 {
            let zero = truth.theta.row(j).iter().all(|&v| v == 0.0);
            assert_eq!(zero, !truth.active_rows.contains(&j));
        }
        let big = SyntheticSpec {
            features: 20,
            tasks: 11,
            row_sparsity: 0.25,
            jump_sparsity: 0.3,
            ..spec
        };
        let (_, truth) = generate_synthetic::<f64>(&big).unwrap();
        assert_eq!(truth.active_rows.len(), 15);
        assert_eq!(truth.jumps.len(), 45);
    }

    #[test]
    fn ragged_sizes() {
        let spec = SyntheticSpec {
            sizes: TaskSizes::PerTask(vec![3, 9, 1, 4]),
            ..SyntheticSpec::synth_a()
        };
        let (data, _) = generate_synthetic::<f32>(&spec).unwrap();
        let sizes: Vec<_> = data.tasks().iter().map(|t| t.rows()).collect();
        assert_eq!(sizes, vec![3, 9, 1, 4]);
    }

    #[test]
    fn invalid_specs() {
        let base = SyntheticSpec::synth_a();
        for bad in [
            SyntheticSpec {
                features: 0,
                ..base.clone()
            },
            SyntheticSpec {
                row_sparsity: 1.5,
                ..base.clone()
            },
            SyntheticSpec {
                jump_sparsity: -0.1,
                ..base.clone()
            },
            SyntheticSpec {
                noise_std: -1.0,
                ..base.clone()
            },
            SyntheticSpec {
                sizes: TaskSizes::PerTask(vec![1, 2]),
                ..base.clone()
            },
            SyntheticSpec {
                sizes: TaskSizes::Uniform(0),
                ..base.clone()
            },
        ] {
            assert!(generate_synthetic::<f64>(&bad).is_err(), "{bad:?}");
        }
    }
}
