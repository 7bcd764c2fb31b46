use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::problem::ProblemData;
use crate::scalar::Scalar;

/// Per-task Cholesky factors of `X_tᵀX_t + cI` together with `X_tᵀy_t`.
///
/// `c` is `ρ` for the two-block θ-update and `ρ + ρ₁` for the multi-block
/// one. The cache is fixed for a run; a different `c` needs a rebuild.
#[derive(Debug, Clone)]
pub struct FactorizationCache<T: Scalar> {
    c: T,
    factors: Vec<Cholesky<T, Dyn>>,
    xty: Vec<DVector<T>>,
}

impl<T: Scalar> FactorizationCache<T> {
    pub fn build(data: &ProblemData<T>, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite_value() {
            return Err(Error::InvalidParameter(format!(
                "ridge shift must be positive, got {}",
                c.as_f64()
            )));
        }
        let p = data.num_features();
        let mut factors = Vec::with_capacity(data.num_tasks());
        let mut xty = Vec::with_capacity(data.num_tasks());
        for (t, task) in data.tasks().iter().enumerate() {
            let mut gram = task.x.tr_mul(&task.x);
            for i in 0..p {
                gram[(i, i)] += c;
            }
            let chol = Cholesky::new(gram).ok_or_else(|| {
                Error::InvalidData(format!(
                    "task {t}: shifted Gram matrix is not positive definite"
                ))
            })?;
            factors.push(chol);
            xty.push(task.x.tr_mul(&task.y));
        }
        Ok(Self { c, factors, xty })
    }

    pub fn shift(&self) -> T {
        self.c
    }

    pub fn num_tasks(&self) -> usize {
        self.factors.len()
    }

    /// Errors unless the cache was built for exactly `needed`.
    pub fn ensure_shift(&self, needed: T) -> Result<()> {
        if self.c != needed {
            return Err(Error::StaleCache {
                built: self.c.as_f64(),
                needed: needed.as_f64(),
            });
        }
        Ok(())
    }

    pub fn xty(&self, t: usize) -> &DVector<T> {
        &self.xty[t]
    }

    /// Solves `(X_tᵀX_t + cI) z = rhs`.
    pub fn solve(&self, t: usize, rhs: &DVector<T>) -> DVector<T> {
        self.factors[t].solve(rhs)
    }

    /// Lower-triangular factor for task `t`.
    pub fn factor(&self, t: usize) -> DMatrix<T> {
        self.factors[t].l()
    }
}
