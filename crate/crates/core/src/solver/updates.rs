//! Individual block updates of the two linearized ADMM schemes.

use nalgebra::{DMatrix, DVector};

use super::cache::FactorizationCache;
use crate::error::{Error, Result};
use crate::kernel::{coupling_gradient, temporal_adjoint, temporal_difference, WeightMatrix};
use crate::problem::{Hyperparams, SolverState, Variant};
use crate::prox::{l1_prox, sgl_prox};
use crate::scalar::Scalar;

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho > T::zero()) || !rho.is_finite_value() {
        return Err(Error::InvalidParameter(format!(
            "rho must be positive, got {}",
            rho.as_f64()
        )));
    }
    Ok(())
}

fn check_task<T: Scalar>(
    t: usize,
    state: &SolverState<T>,
    cache: &FactorizationCache<T>,
) -> Result<()> {
    let (p, tasks) = state.shape();
    if t >= tasks || cache.num_tasks() != tasks || cache.xty(0).len() != p {
        return Err(Error::DimensionMismatch(format!(
            "task {t} against a {p}x{tasks} state and a {}-task cache",
            cache.num_tasks()
        )));
    }
    Ok(())
}

/// Two-block θ-update: solves `(X_tᵀX_t + ρI)θ = X_tᵀy_t − s_t + ρq_t`.
pub fn solve_theta_two_block<T: Scalar>(
    t: usize,
    state: &SolverState<T>,
    hyper: &Hyperparams<T>,
    cache: &FactorizationCache<T>,
) -> Result<DVector<T>> {
    cache.ensure_shift(hyper.rho)?;
    check_task(t, state, cache)?;
    let rhs = theta_rhs_two_block(t, state, hyper.rho, cache);
    Ok(cache.solve(t, &rhs))
}

pub(crate) fn theta_rhs_two_block<T: Scalar>(
    t: usize,
    state: &SolverState<T>,
    rho: T,
    cache: &FactorizationCache<T>,
) -> DVector<T> {
    cache.xty(t) - state.s.column(t) + state.q.column(t) * rho
}

/// Multi-block θ-update with the coupling term linearized at `θ_tᵏ`:
/// solves `(X_tᵀX_t + (ρ+ρ₁)I)θ = X_tᵀy_t − s_t + ρq_t − ũ_t − h_t + ρ₁θ_tᵏ`.
///
/// `h_t` is column `t` of the coupling gradient at `(Θᵏ, Γᵏ)` and `ũ_t` the
/// dual term selected by the dual-coupling mode.
pub fn solve_theta_multi_block<T: Scalar>(
    t: usize,
    state: &SolverState<T>,
    hyper: &Hyperparams<T>,
    rho1: T,
    cache: &FactorizationCache<T>,
    h_t: &DVector<T>,
    u_tilde_t: &DVector<T>,
) -> Result<DVector<T>> {
    cache.ensure_shift(hyper.rho + rho1)?;
    check_task(t, state, cache)?;
    let (p, _) = state.shape();
    if h_t.len() != p || u_tilde_t.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "gradient/dual columns must have length {p}"
        )));
    }
    let rhs = theta_rhs_multi_block(t, state, hyper.rho, rho1, cache, h_t, u_tilde_t);
    Ok(cache.solve(t, &rhs))
}

pub(crate) fn theta_rhs_multi_block<T: Scalar>(
    t: usize,
    state: &SolverState<T>,
    rho: T,
    rho1: T,
    cache: &FactorizationCache<T>,
    h_t: &DVector<T>,
    u_tilde_t: &DVector<T>,
) -> DVector<T> {
    cache.xty(t) - state.s.column(t) + state.q.column(t) * rho - u_tilde_t - h_t
        + state.theta.column(t) * rho1
}

/// γ-update: exact minimiser over `γ` of
/// `u_tᵀ(d_t − γ) + (ρ/2)‖d_t − γ‖² + v_tᵀ(γ − π_t) + (ρ/2)‖γ − π_t‖²`,
/// which is `(d_t + π_t)/2 + (u_t − v_t)/(2ρ)`.
pub fn update_gamma<T: Scalar>(
    d_t: &DVector<T>,
    pi_t: &DVector<T>,
    u_t: &DVector<T>,
    v_t: &DVector<T>,
    rho: T,
) -> Result<DVector<T>> {
    check_rho(rho)?;
    let n = d_t.len();
    if pi_t.len() != n || u_t.len() != n || v_t.len() != n {
        return Err(Error::DimensionMismatch(
            "gamma update vectors differ in length".into(),
        ));
    }
    let half = T::lit(0.5);
    Ok((d_t + pi_t) * half + (u_t - v_t) * (half / rho))
}

/// Column-wise γ-update applied to every task at once.
pub(crate) fn update_gamma_all<T: Scalar>(
    diff: &DMatrix<T>,
    pi: &DMatrix<T>,
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    rho: T,
) -> DMatrix<T> {
    let half = T::lit(0.5);
    (diff + pi) * half + (u - v) * (half / rho)
}

/// Two-block Q-update. `state` must already carry `Θᵏ⁺¹` and `Γᵏ⁺¹`, with
/// `Q`, `S` and `U` still at iteration `k`. The smoothness penalty on `Q`
/// is linearized at `Qᵏ` (gradient taken with `Γᵏ⁺¹`), giving
/// `sgl_prox((ρΘᵏ⁺¹ + ρ₁Qᵏ + S − H − A)/(ρ+ρ₁), λ₁/(ρ+ρ₁), λ₂/(ρ+ρ₁))`
/// with `H` the coupling gradient and `A = U(I − W)ᵀ`.
pub fn update_q_two_block<T: Scalar>(
    state: &SolverState<T>,
    hyper: &Hyperparams<T>,
    rho1: T,
    weights: &WeightMatrix<T>,
) -> Result<DMatrix<T>> {
    check_rho(hyper.rho)?;
    check_rho(rho1)?;
    state.check_shape()?;
    let rho = hyper.rho;
    let h = coupling_gradient(&state.q, &state.gamma, weights, rho)?;
    let a = temporal_adjoint(&state.u, weights)?;
    let c = rho + rho1;
    let arg = (&state.theta * rho + &state.q * rho1 + &state.s - h - a) / c;
    sgl_prox(&arg, hyper.lambda1 / c, hyper.lambda2 / c)
}

/// Multi-block Q-update: `sgl_prox(Θᵏ⁺¹ + S/ρ, λ₁/ρ, λ₂/ρ)`.
pub fn update_q_multi_block<T: Scalar>(
    theta_new: &DMatrix<T>,
    s: &DMatrix<T>,
    hyper: &Hyperparams<T>,
) -> Result<DMatrix<T>> {
    check_rho(hyper.rho)?;
    if theta_new.shape() != s.shape() {
        return Err(Error::DimensionMismatch(
            "Theta and S differ in shape".into(),
        ));
    }
    let rho = hyper.rho;
    sgl_prox(
        &(theta_new + s / rho),
        hyper.lambda1 / rho,
        hyper.lambda2 / rho,
    )
}

/// Π-update for both schemes: `l1_prox(Γᵏ⁺¹ + V/ρ, λ₃/ρ)`.
pub fn update_pi<T: Scalar>(
    gamma_new: &DMatrix<T>,
    v: &DMatrix<T>,
    hyper: &Hyperparams<T>,
) -> Result<DMatrix<T>> {
    check_rho(hyper.rho)?;
    if gamma_new.shape() != v.shape() {
        return Err(Error::DimensionMismatch(
            "Gamma and V differ in shape".into(),
        ));
    }
    let rho = hyper.rho;
    l1_prox(&(gamma_new + v / rho), hyper.lambda3 / rho)
}

/// Dual ascent on all three constraint blocks, in place.
pub fn dual_step<T: Scalar>(
    state: &mut SolverState<T>,
    weights: &WeightMatrix<T>,
    rho: T,
    variant: Variant,
) -> Result<()> {
    check_rho(rho)?;
    state.check_shape()?;
    let base = match variant {
        Variant::TwoBlock => &state.q,
        Variant::MultiBlock => &state.theta,
    };
    let smooth = temporal_difference(base, weights)? - &state.gamma;
    state.s += (&state.theta - &state.q) * rho;
    state.u += smooth * rho;
    state.v += (&state.gamma - &state.pi) * rho;
    Ok(())
}
