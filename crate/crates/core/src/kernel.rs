//! Gaussian temporal kernel over a chain of tasks and the linear operator
//! `Θ ↦ Θ(I − W)` that measures how far each task's parameters are from the
//! kernel-weighted combination of its neighbours.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dimension above which `lipschitz_rho1` switches from a dense
/// eigendecomposition to power iteration.
const EXACT_EIGEN_LIMIT: usize = 200;

/// Normalised Gaussian weights `w[(ℓ, t)]`: the weight of task `ℓ` in the
/// approximation of task `t`. Columns sum to one and the diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Scalar> {
    w: DMatrix<T>,
    /// `I − W`, kept alongside since every consumer needs it.
    complement: DMatrix<T>,
    sigma: T,
}

impl<T: Scalar> WeightMatrix<T> {
    /// Builds the kernel for `tasks` time points with bandwidth `sigma`.
    pub fn build(tasks: usize, sigma: T) -> Result<Self> {
        if tasks < 2 {
            return Err(Error::InvalidDimension(format!(
                "kernel needs at least 2 tasks, got {tasks}"
            )));
        }
        if !(sigma > T::zero()) || !sigma.is_finite_value() {
            return Err(Error::InvalidParameter(format!(
                "kernel bandwidth must be positive and finite, got {}",
                sigma.as_f64()
            )));
        }
        let sigma2 = sigma * sigma;
        let floor = T::lit(1e-300);
        let mut w = DMatrix::<T>::zeros(tasks, tasks);
        for t in 0..tasks {
            // The nearest neighbour is always at distance 1, so shifting the
            // exponent by 1 keeps the largest term at exp(0) and the
            // normalisation cannot underflow to 0/0.
            let mut total = T::zero();
            for l in (0..tasks).filter(|&l| l != t) {
                let d = T::from_usize(l.abs_diff(t)).expect("task index fits scalar");
                let mut k = (-(d * d - T::one()) / sigma2).exp();
                if k < floor {
                    k = T::zero();
                }
                w[(l, t)] = k;
                total += k;
            }
            for l in 0..tasks {
                w[(l, t)] /= total;
            }
        }
        let complement = DMatrix::<T>::identity(tasks, tasks) - &w;
        Ok(Self {
            w,
            complement,
            sigma,
        })
    }

    pub fn tasks(&self) -> usize {
        self.w.nrows()
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Weight of task `from` in the approximation of task `to`.
    pub fn weight(&self, from: usize, to: usize) -> T {
        self.w[(from, to)]
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.w
    }

    /// `I − W`.
    pub fn complement(&self) -> &DMatrix<T> {
        &self.complement
    }

    fn check_cols(&self, m: &DMatrix<T>, what: &str) -> Result<()> {
        if m.ncols() != self.tasks() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has {} columns, kernel has {} tasks",
                m.ncols(),
                self.tasks()
            )));
        }
        Ok(())
    }
}

/// `Θ(I − W) − Γ`; column `t` is `θ_t − Σ_{ℓ≠t} w_{ℓ,t} θ_ℓ − γ_t`.
pub fn temporal_residual<T: Scalar>(
    theta: &DMatrix<T>,
    gamma: &DMatrix<T>,
    weights: &WeightMatrix<T>,
) -> Result<DMatrix<T>> {
    weights.check_cols(theta, "Theta")?;
    if gamma.shape() != theta.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Gamma is {:?}, Theta is {:?}",
            gamma.shape(),
            theta.shape()
        )));
    }
    Ok(theta * weights.complement() - gamma)
}

/// `Θ(I − W)` without the `Γ` offset.
pub fn temporal_difference<T: Scalar>(
    theta: &DMatrix<T>,
    weights: &WeightMatrix<T>,
) -> Result<DMatrix<T>> {
    weights.check_cols(theta, "Theta")?;
    Ok(theta * weights.complement())
}

/// Adjoint of `Θ ↦ Θ(I − W)` under the Frobenius inner product: `M(I − W)ᵀ`.
pub fn temporal_adjoint<T: Scalar>(
    m: &DMatrix<T>,
    weights: &WeightMatrix<T>,
) -> Result<DMatrix<T>> {
    weights.check_cols(m, "M")?;
    Ok(m * weights.complement().transpose())
}

/// Gradient of `h(Θ) = (ρ/2)‖Θ(I − W) − Γ‖²_F`, i.e. `ρ(Θ(I − W) − Γ)(I − W)ᵀ`.
/// Column `t` is the partial gradient with respect to `θ_t`.
pub fn coupling_gradient<T: Scalar>(
    theta: &DMatrix<T>,
    gamma: &DMatrix<T>,
    weights: &WeightMatrix<T>,
    rho: T,
) -> Result<DMatrix<T>> {
    check_rho(rho)?;
    let r = temporal_residual(theta, gamma, weights)?;
    Ok(r * weights.complement().transpose() * rho)
}

/// `2ρ σ_max(I − W)²`, twice the Lipschitz constant of the coupling gradient.
pub fn lipschitz_rho1<T: Scalar>(weights: &WeightMatrix<T>, rho: T) -> Result<T> {
    check_rho(rho)?;
    Ok(T::lit(2.0) * rho * spectral_norm_sq(weights.complement()))
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho > T::zero()) || !rho.is_finite_value() {
        return Err(Error::InvalidParameter(format!(
            "rho must be positive and finite, got {}",
            rho.as_f64()
        )));
    }
    Ok(())
}

/// Largest eigenvalue of `D Dᵀ` for square `D`.
fn spectral_norm_sq<T: Scalar>(d: &DMatrix<T>) -> T {
    let gram = d * d.transpose();
    if d.nrows() <= EXACT_EIGEN_LIMIT {
        SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .copied()
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    } else {
        power_iteration(&gram, 10_000, T::lit(1e-13))
    }
}

fn power_iteration<T: Scalar>(gram: &DMatrix<T>, max_iters: usize, tol: T) -> T {
    let n = gram.nrows();
    // Alternating start vector so it is not orthogonal to the top
    // eigenvector of a chain operator.
    let mut v = nalgebra::DVector::<T>::from_fn(n, |i, _| {
        T::one() + T::from_usize(i % 7).unwrap() * T::lit(0.1)
    });
    v /= v.norm();
    let mut lambda = T::zero();
    for _ in 0..max_iters {
        let next = gram * &v;
        let norm = next.norm();
        if norm == T::zero() {
            return T::zero();
        }
        let estimate = v.dot(&next);
        v = next / norm;
        if (estimate - lambda).abs() <= tol * estimate.abs().max(T::one()) {
            return estimate;
        }
        lambda = estimate;
    }
    lambda
}
