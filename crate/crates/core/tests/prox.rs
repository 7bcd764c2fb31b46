use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsmtl::{group_soft_threshold, l1_prox, sgl_prox, soft_threshold};
use tsmtl_oracles as oracle;

fn matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..6, 1usize..5).prop_flat_map(|(p, t)| {
        prop::collection::vec(-5.0f64..5.0, p * t).prop_map(move |v| DMatrix::from_vec(p, t, v))
    })
}

#[test]
fn sgl_matches_dual_certified_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..40 {
        let p = rng.random_range(1..=4);
        let t = rng.random_range(1..=3);
        let v = oracle::random_matrix(&mut rng, p, t, 3.0);
        let l1 = rng.random_range(0.0..1.5);
        let l2 = rng.random_range(0.0..2.5);
        let cert = oracle::sgl_prox_dual(&v, l1, l2, 1e-14, 400_000);
        let bound = (2.0 * cert.gap).sqrt();
        assert!(
            bound <= 1e-6,
            "instance {i}: oracle certificate too loose ({bound})"
        );
        let z = sgl_prox(&v, l1, l2).unwrap();
        let diff = (&z - &cert.z).amax();
        assert!(diff <= 1e-5, "instance {i}: {diff}");
    }
}

proptest! {
    #[test]
    fn nonexpansive(a in matrix(), seed in any::<u64>(), l1 in 0.0f64..2.0, l2 in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = &a + oracle::random_matrix(&mut rng, a.nrows(), a.ncols(), 2.0);
        let pa = sgl_prox(&a, l1, l2).unwrap();
        let pb = sgl_prox(&b, l1, l2).unwrap();
        prop_assert!((pa - pb).norm() <= (a - b).norm() * (1.0 + 1e-12));
    }

    #[test]
    fn subgradient_optimality(v in matrix(), l1 in 0.0f64..2.0, l2 in 0.0f64..3.0) {
        let z = sgl_prox(&v, l1, l2).unwrap();
        for i in 0..v.nrows() {
            let row_norm = z.row(i).norm();
            if row_norm == 0.0 {
                // Some a with |a| ≤ λ₁ leaves ‖v_i − a‖ ≤ λ₂.
                let best: f64 = (0..v.ncols()).map(|j| oracle::soft(v[(i, j)], l1).powi(2)).sum::<f64>().sqrt();
                prop_assert!(best <= l2 + 1e-12);
                continue;
            }
            for j in 0..v.ncols() {
                let r = v[(i, j)] - z[(i, j)] - l2 * z[(i, j)] / row_norm;
                if z[(i, j)] != 0.0 {
                    prop_assert!((r - l1 * z[(i, j)].signum()).abs() <= 1e-10);
                } else {
                    prop_assert!(r.abs() <= l1 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn row_support_shrinks_with_group_weight(v in matrix(), l1 in 0.0f64..1.0, a in 0.0f64..2.0, extra in 0.0f64..2.0) {
        let small = sgl_prox(&v, l1, a).unwrap();
        let large = sgl_prox(&v, l1, a + extra).unwrap();
        for i in 0..v.nrows() {
            if large.row(i).norm() > 0.0 {
                prop_assert!(small.row(i).norm() > 0.0);
            }
        }
    }

    #[test]
    fn matches_loop_transcription(v in matrix(), l1 in 0.0f64..2.0, l2 in 0.0f64..3.0) {
        let z = sgl_prox(&v, l1, l2).unwrap();
        prop_assert!((z - oracle::sgl_prox_loops(&v, l1, l2)).amax() <= 1e-14);
    }

    #[test]
    fn l1_prox_is_entrywise(v in matrix(), tau in 0.0f64..3.0) {
        let z = l1_prox(&v, tau).unwrap();
        for (a, b) in z.iter().zip(v.iter()) {
            prop_assert_eq!(*a, soft_threshold(*b, tau).unwrap());
        }
    }

    #[test]
    fn group_threshold_minimises(x in prop::collection::vec(-4.0f64..4.0, 1..6), tau in 0.0f64..4.0) {
        let v = DVector::from_vec(x);
        let z = group_soft_threshold(&v, tau).unwrap();
        let obj = |z: &DVector<f64>| 0.5 * (z - &v).norm_squared() + tau * z.norm();
        let best = obj(&z);
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            prop_assert!(best <= obj(&(&v * s)) + 1e-12);
        }
    }
}

#[test]
fn zero_thresholds_are_identity() {
    let v = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, -0.1]);
    assert_eq!(sgl_prox(&v, 0.0, 0.0).unwrap(), v);
}

#[test]
fn negative_thresholds_rejected() {
    let v = DMatrix::from_element(2, 2, 1.0);
    assert!(sgl_prox(&v, -1.0, 0.0).is_err());
    assert!(sgl_prox(&v, 0.0, f64::NAN).is_err());
    assert!(l1_prox(&v, -0.1).is_err());
}
