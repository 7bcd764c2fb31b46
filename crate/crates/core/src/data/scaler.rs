use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::{ProblemData, Task};
use crate::scalar::Scalar;

/// Per-feature mean and population standard deviation of training rows,
/// pooled across tasks. Targets are never scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams<T: Scalar> {
    pub mean: DVector<T>,
    pub std: DVector<T>,
}

pub fn fit_scaler<T: Scalar>(train: &ProblemData<T>) -> Result<ScalerParams<T>> {
    let p = train.num_features();
    let n = T::from_usize(train.total_rows()).unwrap();
    let mut mean = DVector::<T>::zeros(p);
    for task in train.tasks() {
        for row in task.x.row_iter() {
            mean += row.transpose();
        }
    }
    mean /= n;
    let mut var = DVector::<T>::zeros(p);
    for task in train.tasks() {
        for row in task.x.row_iter() {
            let d = row.transpose() - &mean;
            var += d.component_mul(&d);
        }
    }
    var /= n;
    let std = var.map(|v| v.sqrt());
    for j in 0..p {
        let scale = mean[j].abs().max(T::one());
        if !(std[j] > T::lit(1e-12) * scale) {
            return Err(Error::DegenerateFeature { feature: j });
        }
    }
    Ok(ScalerParams { mean, std })
}

pub fn apply_scaler<T: Scalar>(
    data: &ProblemData<T>,
    params: &ScalerParams<T>,
) -> Result<ProblemData<T>> {
    check_width(data, params)?;
    map_features(data, |j, v| (v - params.mean[j]) / params.std[j])
}

/// Undoes [`apply_scaler`].
pub fn invert_scaler<T: Scalar>(
    data: &ProblemData<T>,
    params: &ScalerParams<T>,
) -> Result<ProblemData<T>> {
    check_width(data, params)?;
    map_features(data, |j, v| v * params.std[j] + params.mean[j])
}

fn check_width<T: Scalar>(data: &ProblemData<T>, params: &ScalerParams<T>) -> Result<()> {
    if params.mean.len() != data.num_features() {
        return Err(Error::DimensionMismatch(format!(
            "scaler fitted on {} features, data has {}",
            params.mean.len(),
            data.num_features()
        )));
    }
    Ok(())
}

fn map_features<T: Scalar>(
    data: &ProblemData<T>,
    f: impl Fn(usize, T) -> T,
) -> Result<ProblemData<T>> {
    let tasks = data
        .tasks()
        .iter()
        .map(|task| {
            let mut x = task.x.clone();
            for (j, mut col) in x.column_iter_mut().enumerate() {
                col.apply(|v| *v = f(j, *v));
            }
            Task::new(x, task.y.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    ProblemData::new(tasks)
}
