use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsmtl::{
    coupling_gradient, lipschitz_rho1, temporal_adjoint, temporal_difference, temporal_residual,
    WeightMatrix, WeightMatrix64,
};
use tsmtl_oracles as oracle;

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn columns_are_stochastic(tasks in 2usize..60, sigma in 0.05f64..20.0) {
        let w = WeightMatrix64::build(tasks, sigma).unwrap();
        for t in 0..tasks {
            prop_assert_eq!(w.weight(t, t), 0.0);
            let sum: f64 = (0..tasks).map(|l| w.weight(l, t)).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!((0..tasks).all(|l| w.weight(l, t) >= 0.0));
        }
    }

    #[test]
    fn matches_direct_formula(tasks in 2usize..15, sigma in 0.5f64..10.0) {
        let w = WeightMatrix64::build(tasks, sigma).unwrap();
        let direct = oracle::kernel_weights(tasks, sigma);
        prop_assert!((w.matrix() - direct).amax() <= 1e-13);
    }

    #[test]
    fn adjoint_identity(seed in any::<u64>(), p in 1usize..7, tasks in 2usize..8, sigma in 0.3f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = WeightMatrix64::build(tasks, sigma).unwrap();
        let theta = oracle::random_matrix(&mut rng, p, tasks, 3.0);
        let m = oracle::random_matrix(&mut rng, p, tasks, 3.0);
        let lhs = frob(&temporal_difference(&theta, &w).unwrap(), &m);
        let rhs = frob(&theta, &temporal_adjoint(&m, &w).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn operators_match_loops(seed in any::<u64>(), p in 1usize..6, tasks in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = WeightMatrix64::build(tasks, 1.0).unwrap();
        let wm = oracle::kernel_weights(tasks, 1.0);
        let theta = oracle::random_matrix(&mut rng, p, tasks, 2.0);
        let gamma = oracle::random_matrix(&mut rng, p, tasks, 2.0);
        let r = temporal_residual(&theta, &gamma, &w).unwrap();
        prop_assert!((r - oracle::smooth_residual(&theta, &gamma, &wm)).amax() <= 1e-13);
        let a = temporal_adjoint(&gamma, &w).unwrap();
        prop_assert!((a - oracle::adjoint(&gamma, &wm)).amax() <= 1e-13);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = rng.random_range(1..=6);
        let tasks = rng.random_range(2..=5);
        let sigma = rng.random_range(0.5..3.0);
        let rho = rng.random_range(0.01..30.0);
        let w = WeightMatrix64::build(tasks, sigma).unwrap();
        let wm = oracle::kernel_weights(tasks, sigma);
        let theta = oracle::random_matrix(&mut rng, p, tasks, 2.0);
        let gamma = oracle::random_matrix(&mut rng, p, tasks, 2.0);
        let g = coupling_gradient(&theta, &gamma, &w, rho).unwrap();
        let fd = oracle::central_difference(
            |th| oracle::coupling_value(th, &gamma, &wm, rho),
            &theta,
            1e-5,
        );
        let rel = (&g - &fd).norm() / fd.norm().max(1e-12);
        assert!(rel <= 1e-5, "relative error {rel}");
        let exact = oracle::coupling_gradient_loops(&theta, &gamma, &wm, rho);
        assert!((&g - exact).amax() <= 1e-12 * (1.0 + g.amax()));
    }
}

#[test]
fn rho1_matches_inertia_bisection() {
    for tasks in [2usize, 3, 4, 7, 12, 40] {
        for sigma in [0.5, 1.0, 2.5] {
            let w = WeightMatrix64::build(tasks, sigma).unwrap();
            let wm = oracle::kernel_weights(tasks, sigma);
            let expected = 2.0 * 0.7 * oracle::spectral_norm_sq(&wm);
            let got = lipschitz_rho1(&w, 0.7).unwrap();
            assert!(
                (got - expected).abs() <= 1e-12 * expected,
                "T={tasks} σ={sigma}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn rho1_large_chain_uses_iterative_path() {
    let tasks = 240;
    let w = WeightMatrix64::build(tasks, 1.0).unwrap();
    let expected = 2.0 * oracle::spectral_norm_sq(w.matrix());
    let got = lipschitz_rho1(&w, 1.0).unwrap();
    assert!(
        (got - expected).abs() <= 1e-9 * expected,
        "{got} vs {expected}"
    );
}

#[test]
fn gradient_lipschitz_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let p = rng.random_range(1..=5);
        let tasks = rng.random_range(2..=8);
        let rho = rng.random_range(0.1..10.0);
        let w = WeightMatrix64::build(tasks, 1.0).unwrap();
        let nu = lipschitz_rho1(&w, rho).unwrap() / 2.0;
        let gamma = oracle::random_matrix(&mut rng, p, tasks, 1.0);
        let a = oracle::random_matrix(&mut rng, p, tasks, 3.0);
        let b = oracle::random_matrix(&mut rng, p, tasks, 3.0);
        let ga = coupling_gradient(&a, &gamma, &w, rho).unwrap();
        let gb = coupling_gradient(&b, &gamma, &w, rho).unwrap();
        assert!((ga - gb).norm() <= nu * (a - b).norm() * (1.0 + 1e-12));
    }
}

#[test]
fn single_precision_agrees() {
    let w64 = WeightMatrix64::build(6, 1.3).unwrap();
    let w32 = WeightMatrix::<f32>::build(6, 1.3).unwrap();
    for l in 0..6 {
        for t in 0..6 {
            assert!((w64.weight(l, t) - w32.weight(l, t) as f64).abs() <= 1e-6);
        }
    }
    let r32 = lipschitz_rho1(&w32, 1.0f32).unwrap() as f64;
    let r64 = lipschitz_rho1(&w64, 1.0).unwrap();
    assert!((r32 - r64).abs() <= 1e-5 * r64);
}

#[test]
fn narrow_kernel_stays_finite() {
    let w = WeightMatrix64::build(500, 0.05).unwrap();
    assert!(w.matrix().iter().all(|x| x.is_finite()));
    assert!((w.weight(1, 0) - 1.0).abs() < 1e-12);
    assert!((w.weight(0, 250) - 0.0).abs() < 1e-300);
}
