//! Problem definition: per-task regression data, hyperparameters, the ADMM
//! state, the regularised objective, constraint residuals and error metrics.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{temporal_difference, WeightMatrix};
use crate::scalar::Scalar;

/// One regression task: design matrix `x` (`n_t × p`) and targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Task<T: Scalar> {
    pub x: DMatrix<T>,
    pub y: DVector<T>,
}

impl<T: Scalar> Task<T> {
    pub fn new(x: DMatrix<T>, y: DVector<T>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "design matrix has {} rows, target has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn rows(&self) -> usize {
        self.y.len()
    }
}

/// Per-task data sharing a feature dimension. Task sizes may differ.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData<T: Scalar> {
    tasks: Vec<Task<T>>,
    features: usize,
}

impl<T: Scalar> ProblemData<T> {
    /// Validates shape consistency, nonempty tasks and finiteness.
    pub fn new(tasks: Vec<Task<T>>) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| Error::InvalidDimension("problem has no tasks".into()))?;
        let features = first.x.ncols();
        if features == 0 {
            return Err(Error::InvalidDimension("problem has no features".into()));
        }
        for (t, task) in tasks.iter().enumerate() {
            if task.x.ncols() != features {
                return Err(Error::DimensionMismatch(format!(
                    "task {t} has {} features, expected {features}",
                    task.x.ncols()
                )));
            }
            if task.x.nrows() != task.y.len() {
                return Err(Error::DimensionMismatch(format!(
                    "task {t}: {} design rows vs {} targets",
                    task.x.nrows(),
                    task.y.len()
                )));
            }
            if task.rows() == 0 {
                return Err(Error::EmptyTask { task: t });
            }
            if task
                .x
                .iter()
                .chain(task.y.iter())
                .any(|v| !v.is_finite_value())
            {
                return Err(Error::InvalidData(format!(
                    "task {t} has non-finite entries"
                )));
            }
        }
        Ok(Self { tasks, features })
    }

    pub fn tasks(&self) -> &[Task<T>] {
        &self.tasks
    }

    pub fn task(&self, t: usize) -> &Task<T> {
        &self.tasks[t]
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn num_features(&self) -> usize {
        self.features
    }

    pub fn total_rows(&self) -> usize {
        self.tasks.iter().map(Task::rows).sum()
    }

    pub fn targets(&self) -> Vec<DVector<T>> {
        self.tasks.iter().map(|t| t.y.clone()).collect()
    }

    /// `X_t θ_t` for every task.
    pub fn predict(&self, theta: &DMatrix<T>) -> Result<Vec<DVector<T>>> {
        self.check_theta(theta)?;
        Ok(self
            .tasks
            .iter()
            .enumerate()
            .map(|(t, task)| &task.x * theta.column(t))
            .collect())
    }

    pub(crate) fn check_theta(&self, theta: &DMatrix<T>) -> Result<()> {
        if theta.shape() != (self.features, self.tasks.len()) {
            return Err(Error::DimensionMismatch(format!(
                "parameter matrix is {:?}, problem is {}x{}",
                theta.shape(),
                self.features,
                self.tasks.len()
            )));
        }
        Ok(())
    }
}

/// Which constrained reformulation, and hence which ADMM, is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Smoothness constraint on `Q`; blocks `(Θ, Γ)` then `(Q, Π)`.
    TwoBlock,
    /// Smoothness constraint on `Θ`; blocks `Θ`, then `Γ`, then `(Q, Π)`.
    MultiBlock,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::TwoBlock, Variant::MultiBlock];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::TwoBlock => "two_block",
            Variant::MultiBlock => "multi_block",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_block" | "two" | "2" => Ok(Variant::TwoBlock),
            "multi_block" | "multi" | "3" => Ok(Variant::MultiBlock),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver variant `{other}`"
            ))),
        }
    }
}

/// Dual term used in the multi-block `θ_t` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualCoupling {
    /// `u_t` alone, as the update is usually written.
    #[default]
    Direct,
    /// Column `t` of `U(I − W)ᵀ`, the exact Lagrangian gradient.
    Exact,
}

impl FromStr for DualCoupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(DualCoupling::Direct),
            "exact" => Ok(DualCoupling::Exact),
            other => Err(Error::InvalidParameter(format!(
                "unknown dual coupling `{other}`"
            ))),
        }
    }
}

impl fmt::Display for DualCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DualCoupling::Direct => "direct",
            DualCoupling::Exact => "exact",
        })
    }
}

/// Linearization weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho1<T> {
    /// `2ν`, twice the Lipschitz constant of the coupling gradient.
    Auto,
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams<T: Scalar> {
    pub lambda1: T,
    pub lambda2: T,
    pub lambda3: T,
    pub sigma: T,
    pub rho: T,
    pub rho1: Rho1<T>,
    pub dual_coupling: DualCoupling,
    pub max_iters: usize,
    pub eval_every: usize,
    /// Stop once the total squared primal residual drops below this.
    pub tol: Option<T>,
}

impl<T: Scalar> Hyperparams<T> {
    /// Regularisation weights with the remaining settings at their defaults:
    /// `σ = 1`, `ρ = 1`, `ρ₁ = auto`, direct dual coupling, 1000 iterations.
    pub fn new(lambda1: T, lambda2: T, lambda3: T) -> Self {
        Self {
            lambda1,
            lambda2,
            lambda3,
            sigma: T::one(),
            rho: T::one(),
            rho1: Rho1::Auto,
            dual_coupling: DualCoupling::Direct,
            max_iters: 1000,
            eval_every: 1,
            tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: T, name: &str| {
            if v < T::zero() || !v.is_finite_value() {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {}",
                    v.as_f64()
                )))
            } else {
                Ok(())
            }
        };
        let pos = |v: T, name: &str| {
            if !(v > T::zero()) || !v.is_finite_value() {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {}",
                    v.as_f64()
                )))
            } else {
                Ok(())
            }
        };
        nonneg(self.lambda1, "lambda1")?;
        nonneg(self.lambda2, "lambda2")?;
        nonneg(self.lambda3, "lambda3")?;
        pos(self.sigma, "sigma")?;
        pos(self.rho, "rho")?;
        if let Rho1::Fixed(r) = self.rho1 {
            pos(r, "rho1")?;
        }
        if let Some(tol) = self.tol {
            pos(tol, "tol")?;
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidParameter("eval_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Concrete `ρ₁` for the given kernel.
    pub fn resolve_rho1(&self, weights: &WeightMatrix<T>) -> Result<T> {
        match self.rho1 {
            Rho1::Auto => crate::kernel::lipschitz_rho1(weights, self.rho),
            Rho1::Fixed(r) => Ok(r),
        }
    }
}

/// Primal blocks `Θ, Γ, Q, Π` and duals `S, U, V`, all `p × T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T: Scalar> {
    pub theta: DMatrix<T>,
    pub gamma: DMatrix<T>,
    pub q: DMatrix<T>,
    pub pi: DMatrix<T>,
    pub s: DMatrix<T>,
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
    pub iter: usize,
}

impl<T: Scalar> SolverState<T> {
    pub fn zeros(features: usize, tasks: usize) -> Self {
        let z = DMatrix::zeros(features, tasks);
        Self {
            theta: z.clone(),
            gamma: z.clone(),
            q: z.clone(),
            pi: z.clone(),
            s: z.clone(),
            u: z.clone(),
            v: z,
            iter: 0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.theta.shape()
    }

    pub fn blocks(&self) -> [&DMatrix<T>; 7] {
        [
            &self.theta,
            &self.gamma,
            &self.q,
            &self.pi,
            &self.s,
            &self.u,
            &self.v,
        ]
    }

    pub fn check_shape(&self) -> Result<()> {
        let shape = self.shape();
        if self.blocks().iter().any(|b| b.shape() != shape) {
            return Err(Error::DimensionMismatch(
                "solver state blocks have inconsistent shapes".into(),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite_value()))
    }
}

/// `Σ_t ½‖y_t − X_tθ_t‖² + λ₁‖Θ‖₁ + λ₂‖Θ‖_{2,1} + λ₃ Σ_t ‖θ_t − Σ_{ℓ≠t} w_{ℓ,t}θ_ℓ‖₁`.
pub fn evaluate_objective<T: Scalar>(
    theta: &DMatrix<T>,
    data: &ProblemData<T>,
    hyper: &Hyperparams<T>,
    weights: &WeightMatrix<T>,
) -> Result<T> {
    let loss = squared_loss(theta, data)?;
    Ok(loss + penalty(theta, hyper, weights)?)
}

/// `Σ_t ½‖y_t − X_tθ_t‖²`.
pub fn squared_loss<T: Scalar>(theta: &DMatrix<T>, data: &ProblemData<T>) -> Result<T> {
    data.check_theta(theta)?;
    let half = T::lit(0.5);
    Ok(data
        .tasks()
        .iter()
        .enumerate()
        .map(|(t, task)| (&task.y - &task.x * theta.column(t)).norm_squared() * half)
        .fold(T::zero(), |a, b| a + b))
}

/// Regularisation part of the objective.
pub fn penalty<T: Scalar>(
    theta: &DMatrix<T>,
    hyper: &Hyperparams<T>,
    weights: &WeightMatrix<T>,
) -> Result<T> {
    let l1 = theta.iter().fold(T::zero(), |a, x| a + x.abs());
    let l21 = theta.row_iter().fold(T::zero(), |a, row| a + row.norm());
    let smooth = temporal_difference(theta, weights)?
        .iter()
        .fold(T::zero(), |a, x| a + x.abs());
    Ok(hyper.lambda1 * l1 + hyper.lambda2 * l21 + hyper.lambda3 * smooth)
}

/// Squared Frobenius norms of the three constraint blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalResiduals<T> {
    /// `‖Θ − Q‖²`
    pub r_eq: T,
    /// `‖B(I − W) − Γ‖²` with `B = Q` (two-block) or `B = Θ` (multi-block).
    pub r_smooth: T,
    /// `‖Γ − Π‖²`
    pub r_pi: T,
    pub total: T,
}

pub fn primal_residuals<T: Scalar>(
    state: &SolverState<T>,
    weights: &WeightMatrix<T>,
    variant: Variant,
) -> Result<PrimalResiduals<T>> {
    state.check_shape()?;
    let base = match variant {
        Variant::TwoBlock => &state.q,
        Variant::MultiBlock => &state.theta,
    };
    let r_eq = (&state.theta - &state.q).norm_squared();
    let r_smooth = (temporal_difference(base, weights)? - &state.gamma).norm_squared();
    let r_pi = (&state.gamma - &state.pi).norm_squared();
    Ok(PrimalResiduals {
        r_eq,
        r_smooth,
        r_pi,
        total: r_eq + r_smooth + r_pi,
    })
}

/// `‖(Θ(I − W) − Γ) − (Q(I − W) − Γ)‖_F`: zero whenever `Θ = Q`.
pub fn check_constraint_equivalence<T: Scalar>(
    state: &SolverState<T>,
    weights: &WeightMatrix<T>,
) -> Result<T> {
    state.check_shape()?;
    let on_theta = temporal_difference(&state.theta, weights)? - &state.gamma;
    let on_q = temporal_difference(&state.q, weights)? - &state.gamma;
    Ok((on_theta - on_q).norm())
}

/// Root mean squared error of one task.
pub fn rmse<T: Scalar>(y: &DVector<T>, yhat: &DVector<T>) -> Result<T> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch(format!(
            "rmse: {} targets vs {} predictions",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidDimension("rmse of an empty task".into()));
    }
    let n = T::from_usize(y.len()).unwrap();
    Ok(((y - yhat).norm_squared() / n).sqrt())
}

/// How each task's squared error is normalised in [`nmse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmseDenominator {
    /// Population standard deviation of the task's targets.
    #[default]
    Std,
    /// Population variance of the task's targets.
    Var,
}

impl FromStr for NmseDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "std" => Ok(NmseDenominator::Std),
            "var" | "variance" => Ok(NmseDenominator::Var),
            other => Err(Error::InvalidParameter(format!(
                "unknown nmse denominator `{other}` (expected std or var)"
            ))),
        }
    }
}

impl fmt::Display for NmseDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NmseDenominator::Std => "std",
            NmseDenominator::Var => "var",
        })
    }
}

/// `(Σ_t ‖Y_t − Ŷ_t‖² / σ(Y_t)) / Σ_t n_t`.
pub fn nmse<T: Scalar>(
    targets: &[DVector<T>],
    predictions: &[DVector<T>],
    denominator: NmseDenominator,
) -> Result<T> {
    if targets.len() != predictions.len() {
        return Err(Error::DimensionMismatch(format!(
            "nmse: {} target tasks vs {} prediction tasks",
            targets.len(),
            predictions.len()
        )));
    }
    let mut numerator = T::zero();
    let mut count = 0usize;
    for (t, (y, yhat)) in targets.iter().zip(predictions).enumerate() {
        if y.len() != yhat.len() {
            return Err(Error::DimensionMismatch(format!(
                "nmse task {t}: {} targets vs {} predictions",
                y.len(),
                yhat.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::EmptyTask { task: t });
        }
        let n = T::from_usize(y.len()).unwrap();
        let mean = y.sum() / n;
        let var = y
            .iter()
            .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
            / n;
        let scale = match denominator {
            NmseDenominator::Std => var.sqrt(),
            NmseDenominator::Var => var,
        };
        if !(scale > T::zero()) {
            return Err(Error::DegenerateTarget { task: t });
        }
        numerator += (y - yhat).norm_squared() / scale;
        count += y.len();
    }
    if count == 0 {
        return Err(Error::InvalidDimension("nmse over no tasks".into()));
    }
    Ok(numerator / T::from_usize(count).unwrap())
}
