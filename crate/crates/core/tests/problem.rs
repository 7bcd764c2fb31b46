use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsmtl::problem::{penalty, squared_loss};
use tsmtl::{
    check_constraint_equivalence, evaluate_objective, nmse, primal_residuals, rmse, Hyperparams64,
    NmseDenominator, Variant, WeightMatrix64,
};
use tsmtl_oracles as oracle;

proptest! {
    #[test]
    fn objective_matches_loops(seed in any::<u64>(), p in 1usize..5, tasks in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = oracle::random_problem(&mut rng, p, tasks, 1, 6);
        let w = WeightMatrix64::build(tasks, 1.0).unwrap();
        let theta = oracle::random_matrix(&mut rng, p, tasks, 2.0);
        let l = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let hyper = Hyperparams64::new(l.0, l.1, l.2);
        let got = evaluate_objective(&theta, &data, &hyper, &w).unwrap();
        let expected = oracle::objective_loops(&theta, &data, l, w.matrix());
        prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        prop_assert!(penalty(&theta, &hyper, &w).unwrap() >= 0.0);
        prop_assert!(squared_loss(&theta, &data).unwrap() >= 0.0);
    }

    #[test]
    fn objective_is_convex(seed in any::<u64>(), mix in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = oracle::random_problem(&mut rng, 3, 4, 2, 6);
        let w = WeightMatrix64::build(4, 1.5).unwrap();
        let hyper = Hyperparams64::new(0.3, 0.7, 1.1);
        let a = oracle::random_matrix(&mut rng, 3, 4, 3.0);
        let b = oracle::random_matrix(&mut rng, 3, 4, 3.0);
        let f = |m: &DMatrix<f64>| evaluate_objective(m, &data, &hyper, &w).unwrap();
        let between = &a * mix + &b * (1.0 - mix);
        prop_assert!(f(&between) <= mix * f(&a) + (1.0 - mix) * f(&b) + 1e-9);
    }

    #[test]
    fn smoothness_constraints_agree_when_theta_equals_q(seed in any::<u64>(), p in 1usize..6, tasks in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = WeightMatrix64::build(tasks, 1.0).unwrap();
        let mut state = oracle::random_state(&mut rng, p, tasks, 2.0);
        state.q = state.theta.clone();
        let two = primal_residuals(&state, &w, Variant::TwoBlock).unwrap();
        let multi = primal_residuals(&state, &w, Variant::MultiBlock).unwrap();
        prop_assert!((two.r_smooth - multi.r_smooth).abs() <= 1e-12);
        prop_assert_eq!(two.r_eq, 0.0);
        prop_assert_eq!(check_constraint_equivalence(&state, &w).unwrap(), 0.0);
    }

    #[test]
    fn residuals_match_formula(seed in any::<u64>(), p in 1usize..5, tasks in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = WeightMatrix64::build(tasks, 0.8).unwrap();
        let s = oracle::random_state(&mut rng, p, tasks, 2.0);
        let sq = |m: DMatrix<f64>| m.iter().map(|x| x * x).sum::<f64>();
        for (variant, base) in [(Variant::TwoBlock, &s.q), (Variant::MultiBlock, &s.theta)] {
            let r = primal_residuals(&s, &w, variant).unwrap();
            let r_eq = sq(&s.theta - &s.q);
            let r_smooth = sq(oracle::smooth_residual(base, &s.gamma, w.matrix()));
            let r_pi = sq(&s.gamma - &s.pi);
            prop_assert!((r.r_eq - r_eq).abs() <= 1e-12 * (1.0 + r_eq));
            prop_assert!((r.r_smooth - r_smooth).abs() <= 1e-12 * (1.0 + r_smooth));
            prop_assert!((r.r_pi - r_pi).abs() <= 1e-12 * (1.0 + r_pi));
            prop_assert!((r.total - (r.r_eq + r.r_smooth + r.r_pi)).abs() <= 1e-15 * (1.0 + r.total));
        }
    }

    #[test]
    fn metrics_ignore_row_order(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: DVector<f64> = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let yhat: DVector<f64> = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let py = y.select_rows(&perm);
        let pyhat = yhat.select_rows(&perm);
        let a = rmse(&y, &yhat).unwrap();
        let b = rmse(&py, &pyhat).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        let a = nmse(&[y.clone()], &[yhat.clone()], NmseDenominator::Std).unwrap();
        let b = nmse(&[py], &[pyhat], NmseDenominator::Std).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }
}

#[test]
fn nmse_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sizes = [4usize, 7, 3];
    let ys: Vec<DVector<f64>> = sizes
        .iter()
        .map(|&n| DVector::from_fn(n, |_, _| rng.random_range(-2.0..5.0)))
        .collect();
    let preds: Vec<DVector<f64>> = ys
        .iter()
        .map(|y| y.map(|v| v + rng.random_range(-0.5..0.5)))
        .collect();
    for denom in [NmseDenominator::Std, NmseDenominator::Var] {
        let mut num = 0.0;
        for (y, p) in ys.iter().zip(&preds) {
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let scale = match denom {
                NmseDenominator::Std => var.sqrt(),
                NmseDenominator::Var => var,
            };
            num += y
                .iter()
                .zip(p.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / scale;
        }
        let expected = num / sizes.iter().sum::<usize>() as f64;
        let got = nmse(&ys, &preds, denom).unwrap();
        assert!((got - expected).abs() <= 1e-13 * expected);
    }
}

#[test]
fn degenerate_targets_rejected() {
    let y = DVector::from_element(3, 2.0);
    assert!(nmse(&[y.clone()], &[y], NmseDenominator::Std).is_err());
}
