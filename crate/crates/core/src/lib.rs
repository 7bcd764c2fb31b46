//! Temporally smooth multi-task regression and the two linearized ADMM
//! schemes that solve it.
//!
//! Each of `T` tasks is a linear regression `y_t ≈ X_t θ_t`. The parameters
//! `Θ = [θ_1 … θ_T]` are fitted under a sparse group lasso penalty on `Θ`
//! and an L1 penalty on the residual between each `θ_t` and a Gaussian
//! kernel-weighted average of the other tasks' parameters.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix it to `f64`.

pub mod data;
pub mod error;
pub mod kernel;
pub mod problem;
pub mod prox;
mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use kernel::{
    coupling_gradient, lipschitz_rho1, temporal_adjoint, temporal_difference, temporal_residual,
    WeightMatrix,
};
pub use problem::{
    check_constraint_equivalence, evaluate_objective, nmse, primal_residuals, rmse, DualCoupling,
    Hyperparams, NmseDenominator, PrimalResiduals, ProblemData, Rho1, SolverState, Task, Variant,
};
pub use prox::{group_soft_threshold, l1_prox, sgl_prox, soft_threshold};
pub use scalar::Scalar;
pub use solver::{run, Execution, FactorizationCache, RunOptions, RunOutput, Solver, TraceRecord};

pub type WeightMatrix64 = WeightMatrix<f64>;
pub type ProblemData64 = ProblemData<f64>;
pub type Task64 = Task<f64>;
pub type Hyperparams64 = Hyperparams<f64>;
pub type SolverState64 = SolverState<f64>;
pub type TraceRecord64 = TraceRecord<f64>;
pub type RunOutput64 = RunOutput<f64>;

pub type WeightMatrix32 = WeightMatrix<f32>;
pub type ProblemData32 = ProblemData<f32>;
pub type Hyperparams32 = Hyperparams<f32>;
pub type SolverState32 = SolverState<f32>;
