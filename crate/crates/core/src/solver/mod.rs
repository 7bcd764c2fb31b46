//! Linearized two-block and multi-block ADMM for the temporally smooth
//! multi-task problem.
//!
//! Block order per iteration:
//!
//! | variant       | blocks                                  |
//! |---------------|-----------------------------------------|
//! | `TwoBlock`    | `(Θ, Γ)` from iterate `k`, then `(Q, Π)` |
//! | `MultiBlock`  | `Θ`, then `Γ` from `Θᵏ⁺¹`, then `(Q, Π)` |
//!
//! Both finish with the dual ascent step on `S`, `U` and `V`.

mod cache;
mod updates;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use cache::FactorizationCache;
pub use updates::{
    dual_step, solve_theta_multi_block, solve_theta_two_block, update_gamma, update_pi,
    update_q_multi_block, update_q_two_block,
};

use crate::error::{Error, Result};
use crate::kernel::{coupling_gradient, temporal_adjoint, temporal_difference, WeightMatrix};
use crate::problem::{
    evaluate_objective, nmse, primal_residuals, DualCoupling, Hyperparams, NmseDenominator,
    ProblemData, SolverState, Variant,
};
use crate::scalar::Scalar;

/// How the independent per-task θ-solves are scheduled. Both modes produce
/// bit-identical results: each task's solve touches only its own column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub objective: T,
    pub r_eq: T,
    pub r_smooth: T,
    pub r_pi: T,
    pub r_total: T,
    pub val_nmse: Option<T>,
    pub elapsed_seconds: f64,
}

/// Run-level options that do not change the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub execution: Execution,
    pub nmse_denominator: NmseDenominator,
    /// Record wall-clock time in the trace; when false every record carries
    /// `elapsed_seconds = 0` so traces are byte-reproducible.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            execution: Execution::Serial,
            nmse_denominator: NmseDenominator::Std,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput<T: Scalar> {
    pub trace: Vec<TraceRecord<T>>,
    /// Last state whose entries were all finite.
    pub state: SolverState<T>,
    pub diverged: bool,
    /// Stopped early because the residual tolerance was met.
    pub converged: bool,
}

/// A configured solver: problem, hyperparameters, kernel and cached
/// factorizations for one variant.
#[derive(Debug, Clone)]
pub struct Solver<'a, T: Scalar> {
    data: &'a ProblemData<T>,
    hyper: &'a Hyperparams<T>,
    weights: &'a WeightMatrix<T>,
    variant: Variant,
    rho1: T,
    cache: FactorizationCache<T>,
    execution: Execution,
}

impl<'a, T: Scalar> Solver<'a, T> {
    pub fn new(
        data: &'a ProblemData<T>,
        hyper: &'a Hyperparams<T>,
        weights: &'a WeightMatrix<T>,
        variant: Variant,
    ) -> Result<Self> {
        hyper.validate()?;
        if weights.tasks() != data.num_tasks() {
            return Err(Error::DimensionMismatch(format!(
                "kernel has {} tasks, data has {}",
                weights.tasks(),
                data.num_tasks()
            )));
        }
        let rho1 = hyper.resolve_rho1(weights)?;
        let shift = match variant {
            Variant::TwoBlock => hyper.rho,
            Variant::MultiBlock => hyper.rho + rho1,
        };
        let cache = FactorizationCache::build(data, shift)?;
        Ok(Self {
            data,
            hyper,
            weights,
            variant,
            rho1,
            cache,
            execution: Execution::Serial,
        })
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn rho1(&self) -> T {
        self.rho1
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn cache(&self) -> &FactorizationCache<T> {
        &self.cache
    }

    pub fn initial_state(&self) -> SolverState<T> {
        SolverState::zeros(self.data.num_features(), self.data.num_tasks())
    }

    /// One full ADMM iteration.
    pub fn iterate(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        state.check_shape()?;
        if state.shape() != (self.data.num_features(), self.data.num_tasks()) {
            return Err(Error::DimensionMismatch(format!(
                "state is {:?}, problem is {}x{}",
                state.shape(),
                self.data.num_features(),
                self.data.num_tasks()
            )));
        }
        match self.variant {
            Variant::TwoBlock => self.iterate_two_block(state),
            Variant::MultiBlock => self.iterate_multi_block(state),
        }
    }

    fn solve_columns<F>(&self, solve: F) -> DMatrix<T>
    where
        F: Fn(usize) -> DVector<T> + Sync + Send,
    {
        let tasks = self.data.num_tasks();
        let columns: Vec<DVector<T>> = match self.execution {
            Execution::Serial => (0..tasks).map(&solve).collect(),
            Execution::Parallel => (0..tasks).into_par_iter().map(&solve).collect(),
        };
        DMatrix::from_columns(&columns)
    }

    fn iterate_two_block(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        let rho = self.hyper.rho;
        self.cache.ensure_shift(rho)?;

        // Z1 = (Θ, Γ): both from iterate k only.
        let theta = self.solve_columns(|t| {
            let rhs = updates::theta_rhs_two_block(t, state, rho, &self.cache);
            self.cache.solve(t, &rhs)
        });
        let diff = temporal_difference(&state.q, self.weights)?;
        let gamma = updates::update_gamma_all(&diff, &state.pi, &state.u, &state.v, rho);

        // Z2 = (Q, Π).
        let mut next = SolverState {
            theta,
            gamma,
            iter: state.iter + 1,
            ..state.clone()
        };
        let q = update_q_two_block(&next, self.hyper, self.rho1, self.weights)?;
        let pi = update_pi(&next.gamma, &state.v, self.hyper)?;
        next.q = q;
        next.pi = pi;

        dual_step(&mut next, self.weights, rho, Variant::TwoBlock)?;
        Ok(next)
    }

    fn iterate_multi_block(&self, state: &SolverState<T>) -> Result<SolverState<T>> {
        let rho = self.hyper.rho;
        self.cache.ensure_shift(rho + self.rho1)?;

        // Z1 = Θ, with the coupling term linearized at Θᵏ.
        let h = coupling_gradient(&state.theta, &state.gamma, self.weights, rho)?;
        let u_tilde = match self.hyper.dual_coupling {
            DualCoupling::Direct => state.u.clone(),
            DualCoupling::Exact => temporal_adjoint(&state.u, self.weights)?,
        };
        let theta = self.solve_columns(|t| {
            let h_t = h.column(t).into_owned();
            let u_t = u_tilde.column(t).into_owned();
            let rhs =
                updates::theta_rhs_multi_block(t, state, rho, self.rho1, &self.cache, &h_t, &u_t);
            self.cache.solve(t, &rhs)
        });

        // Z2 = Γ, using the fresh Θᵏ⁺¹.
        let diff = temporal_difference(&theta, self.weights)?;
        let gamma = updates::update_gamma_all(&diff, &state.pi, &state.u, &state.v, rho);

        // Z3 = (Q, Π).
        let q = update_q_multi_block(&theta, &state.s, self.hyper)?;
        let pi = update_pi(&gamma, &state.v, self.hyper)?;

        let mut next = SolverState {
            theta,
            gamma,
            q,
            pi,
            s: state.s.clone(),
            u: state.u.clone(),
            v: state.v.clone(),
            iter: state.iter + 1,
        };
        dual_step(&mut next, self.weights, rho, Variant::MultiBlock)?;
        Ok(next)
    }

    /// Objective, residuals and validation error at `state`.
    pub fn record(
        &self,
        state: &SolverState<T>,
        validation: Option<&ProblemData<T>>,
        denominator: NmseDenominator,
        elapsed_seconds: f64,
    ) -> Result<TraceRecord<T>> {
        let objective = evaluate_objective(&state.theta, self.data, self.hyper, self.weights)?;
        let r = primal_residuals(state, self.weights, self.variant)?;
        let val_nmse = match validation {
            Some(val) => Some(nmse(
                &val.targets(),
                &val.predict(&state.theta)?,
                denominator,
            )?),
            None => None,
        };
        Ok(TraceRecord {
            iter: state.iter,
            objective,
            r_eq: r.r_eq,
            r_smooth: r.r_smooth,
            r_pi: r.r_pi,
            r_total: r.total,
            val_nmse,
            elapsed_seconds,
        })
    }
}

impl<T: Scalar> TraceRecord<T> {
    /// All recorded quantities are finite.
    pub fn is_finite(&self) -> bool {
        [
            self.objective,
            self.r_eq,
            self.r_smooth,
            self.r_pi,
            self.r_total,
        ]
        .iter()
        .all(|v| v.is_finite_value())
            && self.val_nmse.is_none_or(|v| v.is_finite_value())
    }
}

/// Runs `hyper.max_iters` iterations from the all-zero state.
///
/// A record is kept every `hyper.eval_every` iterations and at the last
/// iteration. Non-finite iterates stop the run with `diverged = true`; the
/// trace then holds only the finite records that preceded them.
pub fn run<T: Scalar>(
    data: &ProblemData<T>,
    hyper: &Hyperparams<T>,
    weights: &WeightMatrix<T>,
    variant: Variant,
    validation: Option<&ProblemData<T>>,
    options: RunOptions,
) -> Result<RunOutput<T>> {
    let solver = Solver::new(data, hyper, weights, variant)?.with_execution(options.execution);
    if let Some(val) = validation {
        if val.num_tasks() != data.num_tasks() || val.num_features() != data.num_features() {
            return Err(Error::DimensionMismatch(format!(
                "validation data is {}x{}, training data is {}x{}",
                val.num_features(),
                val.num_tasks(),
                data.num_features(),
                data.num_tasks()
            )));
        }
        // Surface degenerate validation targets before iterating.
        let zeros = DMatrix::zeros(data.num_features(), data.num_tasks());
        nmse(
            &val.targets(),
            &val.predict(&zeros)?,
            options.nmse_denominator,
        )?;
    }

    let start = Instant::now();
    let elapsed = || {
        if options.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };

    let mut state = solver.initial_state();
    let mut trace = Vec::with_capacity(hyper.max_iters / hyper.eval_every + 1);
    let mut diverged = false;
    let mut converged = false;

    for k in 1..=hyper.max_iters {
        let next = solver.iterate(&state)?;
        if !next.is_finite() {
            diverged = true;
            break;
        }
        let last = k == hyper.max_iters;
        let tol_hit = match hyper.tol {
            Some(tol) => primal_residuals(&next, weights, variant)?.total <= tol,
            None => false,
        };
        if k % hyper.eval_every == 0 || last || tol_hit {
            let record = solver.record(&next, validation, options.nmse_denominator, elapsed())?;
            if !record.is_finite() {
                diverged = true;
                break;
            }
            trace.push(record);
        }
        state = next;
        if tol_hit {
            converged = true;
            break;
        }
    }

    Ok(RunOutput {
        trace,
        state,
        diverged,
        converged,
    })
}
