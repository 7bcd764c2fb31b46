use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{ProblemData, Task};
use crate::scalar::Scalar;

/// Row indices (into the original task) assigned to each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Splits<T: Scalar> {
    pub train: ProblemData<T>,
    pub validation: ProblemData<T>,
    pub test: ProblemData<T>,
    pub indices: Vec<TaskSplit>,
}

// Guards floor() against products like 0.8 * 5 = 3.9999999999999996.
const FLOOR_SLACK: f64 = 1e-9;

/// Sizes `(train, validation, test)` for a task of `n` rows:
/// `test = ⌊(1 − train_frac)·n⌋`, `train = ⌊(1 − val_frac)·(n − test)⌋`,
/// validation gets the rest of the training portion.
pub fn split_sizes(n: usize, train_frac: f64, val_frac_of_train: f64) -> (usize, usize, usize) {
    let test = ((1.0 - train_frac) * n as f64 + FLOOR_SLACK).floor() as usize;
    let rest = n - test.min(n);
    let train = ((1.0 - val_frac_of_train) * rest as f64 + FLOOR_SLACK).floor() as usize;
    (train, rest - train, test.min(n))
}

/// Per-task seeded random split into train, validation and test rows.
pub fn split<T: Scalar>(
    data: &ProblemData<T>,
    train_frac: f64,
    val_frac_of_train: f64,
    seed: u64,
) -> Result<Splits<T>> {
    for (name, f) in [
        ("train_frac", train_frac),
        ("val_frac_of_train", val_frac_of_train),
    ] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in (0, 1), got {f}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<Task<T>>; 3] = Default::default();
    let mut indices = Vec::with_capacity(data.num_tasks());
    for (t, task) in data.tasks().iter().enumerate() {
        let n = task.rows();
        let (train, val, test) = split_sizes(n, train_frac, val_frac_of_train);
        if train == 0 || val == 0 || test == 0 {
            return Err(Error::TaskTooSmall { task: t, rows: n });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut ts = TaskSplit {
            test: perm[..test].to_vec(),
            validation: perm[test..test + val].to_vec(),
            train: perm[test + val..].to_vec(),
        };
        ts.test.sort_unstable();
        ts.validation.sort_unstable();
        ts.train.sort_unstable();
        parts[0].push(select(task, &ts.train)?);
        parts[1].push(select(task, &ts.validation)?);
        parts[2].push(select(task, &ts.test)?);
        indices.push(ts);
    }
    let [train, validation, test] = parts;
    Ok(Splits {
        train: ProblemData::new(train)?,
        validation: ProblemData::new(validation)?,
        test: ProblemData::new(test)?,
        indices,
    })
}

fn select<T: Scalar>(task: &Task<T>, rows: &[usize]) -> Result<Task<T>> {
    Task::new(task.x.select_rows(rows), task.y.select_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn numbered(sizes: &[usize]) -> ProblemData<f64> {
        let tasks = sizes
            .iter()
            .map(|&n| {
                let x = DMatrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64);
                let y = DVector::from_fn(n, |i, _| i as f64);
                Task::new(x, y).unwrap()
            })
            .collect();
        ProblemData::new(tasks).unwrap()
    }

    #[test]
    fn sizes_follow_rounding_rule() {
        assert_eq!(split_sizes(10, 0.7, 0.2), (5, 2, 3));
        assert_eq!(split_sizes(20, 0.7, 0.2), (11, 3, 6));
        assert_eq!(split_sizes(100, 0.7, 0.2), (56, 14, 30));
    }

    #[test]
    fn partitions_rows() {
        let data = numbered(&[10, 17, 33]);
        let s = split(&data, 0.7, 0.2, 3).unwrap();
        for (t, ts) in s.indices.iter().enumerate() {
            let mut all: Vec<usize> = ts
                .train
                .iter()
                .chain(&ts.validation)
                .chain(&ts.test)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..data.task(t).rows()).collect::<Vec<_>>());
            assert_eq!(s.train.task(t).rows(), ts.train.len());
            for (k, &i) in ts.validation.iter().enumerate() {
                assert_eq!(s.validation.task(t).y[k], i as f64);
            }
        }
        assert_eq!(s.train.task(0).rows(), 5);
        assert_eq!(s.validation.task(0).rows(), 2);
        assert_eq!(s.test.task(0).rows(), 3);
    }

    #[test]
    fn seeded() {
        let data = numbered(&[12, 12]);
        let a = split(&data, 0.7, 0.2, 11).unwrap();
        let b = split(&data, 0.7, 0.2, 11).unwrap();
        assert_eq!(a.indices, b.indices);
        let c = split(&data, 0.7, 0.2, 12).unwrap();
        assert_ne!(a.indices, c.indices);
    }

    #[test]
    fn too_small_task_named() {
        let data = numbered(&[10, 3]);
        assert!(matches!(
            split(&data, 0.7, 0.2, 0),
            Err(Error::TaskTooSmall { task: 1, rows: 3 })
        ));
        assert!(split(&numbered(&[10]), 1.0, 0.2, 0).is_err());
        assert!(split(&numbered(&[10]), 0.7, 0.0, 0).is_err());
    }
}
