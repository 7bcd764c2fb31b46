use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsmtl::data::{
    apply_scaler, fit_scaler, generate_synthetic, invert_scaler, parse_air_quality, parse_portable,
    split, split_sizes, to_portable_string, SyntheticSpec, TaskSizes,
};
use tsmtl::{ProblemData64, Task64};
use tsmtl_oracles as oracle;

#[test]
fn noiseless_synthetic_data_is_exact() {
    let spec = SyntheticSpec {
        noise_std: 0.0,
        ..SyntheticSpec::synth_a()
    };
    let (data, truth) = generate_synthetic::<f64>(&spec).unwrap();
    assert_eq!(data.num_tasks(), 4);
    assert_eq!(data.num_features(), 5);
    for (t, task) in data.tasks().iter().enumerate() {
        assert_eq!(task.rows(), 20);
        let pred = &task.x * truth.theta.column(t);
        assert!((pred - &task.y).amax() <= 1e-12);
    }
    // round(0.4·5) = 2 zero rows, round(0.1·3·3) = 1 jump.
    assert_eq!(truth.active_rows.len(), 3);
    assert_eq!(truth.jumps.len(), 1);
    for j in 0..5 {
        let zero = truth.theta.row(j).iter().all(|v| *v == 0.0);
        assert_eq!(zero, !truth.active_rows.contains(&j));
    }
    let (row, t) = truth.jumps[0];
    assert!(truth.active_rows.contains(&row));
    assert!((1..4).contains(&t));
}

#[test]
fn synthetic_generation_is_seeded() {
    let a = generate_synthetic::<f64>(&SyntheticSpec::synth_a()).unwrap();
    let b = generate_synthetic::<f64>(&SyntheticSpec::synth_a()).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let c = generate_synthetic::<f64>(&SyntheticSpec {
        seed: 8,
        ..SyntheticSpec::synth_a()
    })
    .unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn uneven_task_sizes() {
    let spec = SyntheticSpec {
        sizes: TaskSizes::PerTask(vec![5, 9, 30, 12]),
        ..SyntheticSpec::synth_a()
    };
    let (data, _) = generate_synthetic::<f64>(&spec).unwrap();
    let rows: Vec<usize> = data.tasks().iter().map(|t| t.rows()).collect();
    assert_eq!(rows, vec![5, 9, 30, 12]);
    let bad = SyntheticSpec {
        sizes: TaskSizes::PerTask(vec![5, 9]),
        ..SyntheticSpec::synth_a()
    };
    assert!(generate_synthetic::<f64>(&bad).is_err());
}

fn random_data(seed: u64, tasks: usize, min_rows: usize) -> ProblemData64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = (0..tasks)
        .map(|_| {
            let n = rng.random_range(min_rows..min_rows + 25);
            let x = DMatrix::from_fn(n, 3, |_, j| {
                rng.random_range(-5.0..5.0) * (j + 1) as f64 + 10.0 * j as f64
            });
            let y = DVector::from_fn(n, |i, _| i as f64);
            Task64::new(x, y).unwrap()
        })
        .collect();
    ProblemData64::new(tasks).unwrap()
}

proptest! {
    #[test]
    fn split_partitions_every_task(seed in any::<u64>(), tasks in 1usize..6) {
        let data = random_data(seed, tasks, 10);
        let s = split(&data, 0.7, 0.2, seed).unwrap();
        for (t, ts) in s.indices.iter().enumerate() {
            let n = data.task(t).rows();
            let mut all: Vec<usize> = ts.train.iter().chain(&ts.validation).chain(&ts.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let (a, b, c) = split_sizes(n, 0.7, 0.2);
            prop_assert_eq!((ts.train.len(), ts.validation.len(), ts.test.len()), (a, b, c));
            prop_assert_eq!(c, (0.3 * n as f64 + 1e-9).floor() as usize);
            // Targets are row indices, so each part's rows are traceable.
            for (k, &i) in ts.train.iter().enumerate() {
                prop_assert_eq!(s.train.task(t).y[k], i as f64);
            }
        }
    }

    #[test]
    fn scaler_standardises_and_round_trips(seed in any::<u64>(), tasks in 1usize..5) {
        let data = random_data(seed, tasks, 3);
        let params = fit_scaler(&data).unwrap();
        let z = apply_scaler(&data, &params).unwrap();
        let n = z.total_rows() as f64;
        for j in 0..3 {
            let vals: Vec<f64> = z.tasks().iter().flat_map(|t| t.x.column(j).iter().copied().collect::<Vec<_>>()).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((std - 1.0).abs() <= 1e-10);
        }
        let back = invert_scaler(&z, &params).unwrap();
        for (a, b) in data.tasks().iter().zip(back.tasks()) {
            prop_assert!((&a.x - &b.x).amax() <= 1e-10);
        }
    }

    #[test]
    fn portable_round_trip(seed in any::<u64>(), tasks in 1usize..5) {
        let data = random_data(seed, tasks, 1);
        let text = to_portable_string(&data, Some(seed));
        let back = parse_portable::<f64>(&text).unwrap();
        prop_assert_eq!(back.data, data);
        prop_assert_eq!(back.seed, Some(seed));
    }
}

#[test]
fn air_quality_fixture_loads() {
    let fx = oracle::air_quality_fixture(3, 12);
    let aq = parse_air_quality::<f64, _>(fx.text.as_bytes(), true).unwrap();
    assert_eq!(aq.data.num_tasks(), 24);
    assert_eq!(aq.data.num_features(), 7);
    assert_eq!(aq.hours, (0..24).collect::<Vec<u32>>());
    for h in 0..24 {
        assert_eq!(aq.data.task(h).rows(), fx.kept_per_hour[h]);
    }
    assert_eq!(aq.report.dropped_missing, fx.dropped_missing);
    assert_eq!(aq.report.blank_rows, fx.blank_rows);
    assert_eq!(aq.report.rows_read, 12 * 24);
    for task in aq.data.tasks() {
        assert!(task.x.iter().chain(task.y.iter()).all(|v| *v != -200.0));
    }
}
