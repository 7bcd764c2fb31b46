//! Proximal operators for the L1 and row-wise L2,1 penalties.
//!
//! Groups are the rows of a `p × T` parameter matrix: feature `j` across all
//! tasks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_tau<T: Scalar>(tau: T, name: &str) -> Result<()> {
    if tau < T::zero() || !tau.is_finite_value() {
        return Err(Error::InvalidParameter(format!(
            "{name} must be a finite nonnegative threshold, got {}",
            tau.as_f64()
        )));
    }
    Ok(())
}

#[inline]
fn shrink<T: Scalar>(x: T, tau: T) -> T {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        T::zero()
    }
}

/// `sign(x)·max(|x| − τ, 0)`.
pub fn soft_threshold<T: Scalar>(x: T, tau: T) -> Result<T> {
    check_tau(tau, "tau")?;
    Ok(shrink(x, tau))
}

/// Entrywise soft-threshold: the prox of `τ‖·‖₁`.
pub fn l1_prox<T: Scalar>(m: &DMatrix<T>, tau: T) -> Result<DMatrix<T>> {
    check_tau(tau, "tau")?;
    Ok(m.map(|x| shrink(x, tau)))
}

/// Block soft-threshold: the prox of `τ‖·‖₂`.
pub fn group_soft_threshold<T: Scalar>(v: &DVector<T>, tau: T) -> Result<DVector<T>> {
    check_tau(tau, "tau")?;
    let mut out = v.clone();
    let norm = v.norm();
    out *= group_scale(norm, tau);
    Ok(out)
}

#[inline]
fn group_scale<T: Scalar>(norm: T, tau: T) -> T {
    if norm <= tau || norm == T::zero() {
        T::zero()
    } else {
        T::one() - tau / norm
    }
}

/// Prox of the sparse group lasso `τ₁‖Z‖₁ + τ₂‖Z‖_{2,1}` with row groups:
/// soft-threshold every entry at `τ₁`, then group-threshold each row at `τ₂`.
pub fn sgl_prox<T: Scalar>(m: &DMatrix<T>, tau1: T, tau2: T) -> Result<DMatrix<T>> {
    check_tau(tau1, "tau1")?;
    check_tau(tau2, "tau2")?;
    let mut z = m.map(|x| shrink(x, tau1));
    for mut row in z.row_iter_mut() {
        let scale = group_scale(row.norm(), tau2);
        row *= scale;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn scalar_soft_threshold() {
        assert_eq!(soft_threshold(0.0, 0.7).unwrap(), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0).unwrap(), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0).unwrap(), -2.0);
        assert!(matches!(
            soft_threshold(1.0, -0.1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn l1_examples() {
        let m = dmatrix![3.0, -0.5; 0.2, -4.0];
        assert_eq!(l1_prox(&m, 0.0).unwrap(), m);
        assert_eq!(
            l1_prox(&dmatrix![3.0, -0.5], 1.0).unwrap(),
            dmatrix![2.0, 0.0]
        );
        assert!(l1_prox(&m, -1.0).is_err());
    }

    #[test]
    fn group_examples() {
        let v = dvector![3.0, 4.0];
        let out = group_soft_threshold(&v, 1.0).unwrap();
        assert_relative_eq!(out, dvector![2.4, 3.2], epsilon = 1e-15);
        assert_eq!(group_soft_threshold(&v, 5.0).unwrap(), dvector![0.0, 0.0]);
        assert_eq!(group_soft_threshold(&v, 0.0).unwrap(), v);
        assert_eq!(
            group_soft_threshold(&dvector![0.0, 0.0], 0.0).unwrap(),
            dvector![0.0, 0.0]
        );
        assert!(group_soft_threshold(&v, -1.0).is_err());
    }

    #[test]
    fn sgl_examples() {
        let m = dmatrix![3.0, 4.0; 0.5, -0.5];
        assert_eq!(sgl_prox(&m, 0.0, 0.0).unwrap(), m);
        let z = sgl_prox(&m, 1.0, 1.0).unwrap();
        let scale = 1.0 - 1.0 / 13f64.sqrt();
        assert_relative_eq!(z[(0, 0)], 2.0 * scale, epsilon = 1e-15);
        assert_relative_eq!(z[(0, 1)], 3.0 * scale, epsilon = 1e-15);
        assert_relative_eq!(z[(0, 0)], 1.44530, epsilon = 1e-5);
        assert_relative_eq!(z[(0, 1)], 2.16795, epsilon = 1e-5);
        assert_eq!(z[(1, 0)], 0.0);
        assert_eq!(z[(1, 1)], 0.0);
        assert_eq!(
            sgl_prox(&dmatrix![0.5, -0.5], 1.0, 0.0).unwrap(),
            dmatrix![0.0, 0.0]
        );
        assert!(sgl_prox(&m, 1.0, -1.0).is_err());
        assert!(sgl_prox(&m, -1.0, 1.0).is_err());
    }

    #[test]
    fn sgl_reduces_to_components() {
        let m = dmatrix![1.3, -2.0, 0.1; -0.4, 0.9, 3.3];
        assert_eq!(sgl_prox(&m, 0.6, 0.0).unwrap(), l1_prox(&m, 0.6).unwrap());
        let z = sgl_prox(&m, 0.0, 1.1).unwrap();
        for (j, row) in m.row_iter().enumerate() {
            let g = group_soft_threshold(&row.transpose(), 1.1).unwrap();
            assert_eq!(z.row(j), g.transpose());
        }
    }

    #[test]
    fn works_in_single_precision() {
        let z = sgl_prox(&dmatrix![3.0f32, 4.0], 1.0, 1.0).unwrap();
        assert!((z[(0, 0)] - 1.44530).abs() < 1e-5);
    }
}
