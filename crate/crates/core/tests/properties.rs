//! Property tests over the public API: projection invariances, sweep
//! bookkeeping, model invariances and metric ranges.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wasserstress::constraints::{ConstraintSpec, Family, Mode};
use wasserstress::dataset::{read_csv, EmpiricalDataset};
use wasserstress::metrics::{
    disparate_impact, pp1, reg_mean_var, series_over_sweep, GroupCounts, MetricKind,
};
use wasserstress::models::{fit_naive_bayes, fit_tree, Task, TreeParams};
use wasserstress::projection::{exact_w2_small, project};
use wasserstress::solver::{sample_moment, SolverOptions};
use wasserstress::stress::{make_sweep, run_sweep};

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

fn gaussian(seed: u64, n: usize, d: usize) -> EmpiricalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    EmpiricalDataset::from_flat(names(d), values).unwrap()
}

/// Entries on a quarter grid so sums and shifts are exact.
fn dyadic(seed: u64, n: usize, d: usize) -> EmpiricalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d)
        .map(|_| rng.random_range(-400..400) as f64 / 4.0)
        .collect();
    EmpiricalDataset::from_flat(names(d), values).unwrap()
}

fn family_for(kind: usize, d: usize) -> Family {
    match kind {
        0 => Family::Linear(vec![0]),
        1 => Family::Norm,
        2 => Family::Quadratic(vec![d - 1]),
        3 => Family::LinearQuadratic(0),
        4 => Family::CrossProduct(0, d - 1),
        _ => Family::LinearCross(0, d - 1),
    }
}

/// Multiplier small enough to sit inside every family's domain.
fn planted(kind: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = family_for(kind, 2).k();
    (0..k).map(|_| rng.random_range(-0.4..0.4)).collect()
}

fn pushed_moment(ds: &EmpiricalDataset, family: &Family, lambda: &[f64]) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = ds
        .rows()
        .map(|y| family.transport_map(lambda, y).unwrap())
        .collect();
    sample_moment(
        &EmpiricalDataset::new(ds.column_names().to_vec(), rows).unwrap(),
        family,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_projection_commutes_with_translation(
        seed in any::<u64>(),
        log_n in 2u32..7,
        d in 1usize..4,
        shift in -200i32..200,
        target in -400i32..400,
    ) {
        let n = 1usize << log_n;
        let ds = dyadic(seed, n, d);
        let c = shift as f64 / 4.0;
        let t = target as f64 / 4.0;
        let moved = ds.with_values(ds.values().iter().map(|v| v + c).collect()).unwrap();
        let opts = SolverOptions::default();
        let a = project(&ds, &ConstraintSpec::new(Family::Linear(vec![0]), vec![t], Mode::Equality).unwrap(), &opts).unwrap();
        let b = project(&moved, &ConstraintSpec::new(Family::Linear(vec![0]), vec![t + c], Mode::Equality).unwrap(), &opts).unwrap();
        prop_assert_eq!(&a.multiplier.lambda, &b.multiplier.lambda);
        let shifted: Vec<f64> = a.rows.values().iter().map(|v| v + c).collect();
        prop_assert_eq!(shifted.as_slice(), b.rows.values());
    }

    #[test]
    fn map_cost_is_the_exact_transport_cost(
        seed in any::<u64>(),
        n in 2usize..30,
        d in 2usize..5,
        kind in 0usize..6,
    ) {
        let ds = gaussian(seed, n, d);
        let family = family_for(kind, d);
        let lambda = planted(kind, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let t = pushed_moment(&ds, &family, &lambda);
        let spec = ConstraintSpec::new(family, t, Mode::Equality).unwrap();
        let p = project(&ds, &spec, &SolverOptions::default()).unwrap();
        let exact = exact_w2_small(&ds, &p.rows).unwrap();
        prop_assert!((exact - p.squared_cost).abs() <= 1e-8 * (1.0 + exact), "exact {} map {}", exact, p.squared_cost);
    }

    #[test]
    fn zero_cost_exactly_when_already_satisfied(
        seed in any::<u64>(),
        n in 5usize..60,
        d in 2usize..5,
        kind in 0usize..6,
    ) {
        let ds = gaussian(seed, n, d);
        let family = family_for(kind, d);
        let opts = SolverOptions::default();

        let here = sample_moment(&ds, &family);
        let spec = ConstraintSpec::new(family.clone(), here, Mode::Equality).unwrap();
        let p = project(&ds, &spec, &opts).unwrap();
        prop_assert!(p.multiplier.lambda.iter().all(|&l| l == 0.0), "lambda {:?}", p.multiplier.lambda);
        prop_assert_eq!(p.squared_cost, 0.0);
        prop_assert_eq!(p.rows.values(), ds.values());

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut lambda = planted(kind, &mut rng);
        lambda[0] = if rng.random::<bool>() { 0.3 } else { -0.3 };
        let spec = ConstraintSpec::new(family.clone(), pushed_moment(&ds, &family, &lambda), Mode::Equality).unwrap();
        let p = project(&ds, &spec, &opts).unwrap();
        prop_assert!(p.squared_cost > 0.0);
        prop_assert!(p.multiplier.lambda.iter().any(|&l| l != 0.0));
    }

    #[test]
    fn inequality_solutions_satisfy_kkt(
        seed in any::<u64>(),
        n in 10usize..80,
        d in 2usize..4,
        kind in 0usize..6,
        loosen in 0.0f64..1.5,
    ) {
        let ds = gaussian(seed, n, d);
        let family = family_for(kind, d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let lambda: Vec<f64> = planted(kind, &mut rng).iter().map(|l| l.abs()).collect();
        let mut t = pushed_moment(&ds, &family, &lambda);
        t[0] -= loosen;
        let spec = ConstraintSpec::new(family.clone(), t.clone(), Mode::InequalityGe).unwrap();
        let p = project(&ds, &spec, &SolverOptions::with_tol(1e-10)).unwrap();
        let m = sample_moment(&p.rows, &family);
        for (i, (&l, (&ti, &mi))) in p.multiplier.lambda.iter().zip(t.iter().zip(&m)).enumerate() {
            prop_assert!(l >= 0.0, "lambda[{}] = {}", i, l);
            prop_assert!(mi - ti >= -1e-8, "constraint {} violated by {}", i, ti - mi);
            prop_assert!((l * (mi - ti)).abs() <= 1e-8, "slackness {} at {}", l * (mi - ti), i);
        }
    }

    #[test]
    fn sweep_hits_targets_and_leaves_other_columns(
        seed in any::<u64>(),
        n in 5usize..80,
        d in 1usize..4,
        j in 0usize..3,
        half in 1usize..6,
    ) {
        let j = j % d;
        let ds = gaussian(seed, n, d);
        let sweep = make_sweep(&ds, j, 2 * half + 1, 0.1).unwrap();
        let opts = SolverOptions::default();
        let first = run_sweep(&ds, &sweep, Mode::Equality, &opts);
        let second = run_sweep(&ds, &sweep, Mode::Equality, &opts);
        for ((a, b), &t) in first.iter().zip(&second).zip(&sweep.targets) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            prop_assert_eq!(a.rows.values(), b.rows.values());
            let mean = a.rows.column_mean(j).unwrap();
            prop_assert!((mean - t).abs() <= 1e-12 * t.abs().max(1.0), "mean {} target {}", mean, t);
            for k in (0..d).filter(|&k| k != j) {
                prop_assert_eq!(a.rows.column(k).unwrap(), ds.column(k).unwrap());
            }
        }
    }

    #[test]
    fn tree_ignores_monotone_rescaling(
        seed in any::<u64>(),
        n in 10usize..80,
        regression in any::<bool>(),
        depth in 1usize..5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for _ in 0..n {
            let a = rng.random_range(-50..50) as f64;
            let b = rng.random_range(-50..50) as f64;
            let y = if regression { a - 0.5 * b + rng.random_range(-3.0..3.0) } else { (a + b > rng.random_range(-20.0..20.0)) as u8 as f64 };
            rows.push(vec![a, b, y]);
        }
        let cols = vec!["a".to_string(), "b".to_string(), "y".to_string()];
        let rescale = |r: &[f64]| vec![(r[0] / 8.0).exp(), r[1] * r[1] * r[1] + r[1], r[2]];
        let train = EmpiricalDataset::new(cols.clone(), rows.clone()).unwrap();
        let train_r = EmpiricalDataset::new(cols, rows.iter().map(|r| rescale(r)).collect()).unwrap();
        let task = if regression { Task::Regression } else { Task::Classification };
        let params = TreeParams { max_depth: depth, ..TreeParams::default() };
        let tree = fit_tree(&train, "y", task, params).unwrap();
        let tree_r = fit_tree(&train_r, "y", task, params).unwrap();

        let query: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-60..60) as f64, rng.random_range(-60..60) as f64, 0.0]).collect();
        let q = EmpiricalDataset::new(vec!["a".into(), "b".into()], query.iter().map(|r| r[..2].to_vec()).collect()).unwrap();
        let q_r = EmpiricalDataset::new(vec!["a".into(), "b".into()], query.iter().map(|r| rescale(r)[..2].to_vec()).collect()).unwrap();
        prop_assert_eq!(tree.predict(&q).unwrap(), tree_r.predict(&q_r).unwrap());
    }

    #[test]
    fn builtin_models_are_deterministic(seed in any::<u64>(), n in 10usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| {
            let a: f64 = rng.sample(StandardNormal);
            vec![a, rng.sample(StandardNormal), (i % 2) as f64]
        }).collect();
        let train = EmpiricalDataset::new(vec!["a".into(), "b".into(), "y".into()], rows).unwrap();
        let q = train.without_column("y").unwrap();
        let params = TreeParams { max_features: Some(1), seed, ..TreeParams::default() };
        let t1 = fit_tree(&train, "y", Task::Classification, params).unwrap();
        let t2 = fit_tree(&train, "y", Task::Classification, params).unwrap();
        prop_assert_eq!(t1.predict(&q).unwrap(), t2.predict(&q).unwrap());
        let nb1 = fit_naive_bayes(&train, "y").unwrap();
        let nb2 = fit_naive_bayes(&train, "y").unwrap();
        let p1 = nb1.predict(&q).unwrap();
        prop_assert_eq!(&p1, &nb2.predict(&q).unwrap());
        let rate = pp1(&p1).unwrap();
        prop_assert!((0.0..=1.0).contains(&rate));
    }

    #[test]
    fn regression_variance_is_nonnegative(seed in any::<u64>(), n in 5usize..60, depth in 1usize..6) {
        let ds = gaussian(seed, n, 3);
        let tree = fit_tree(&ds, "x2", Task::Regression, TreeParams { max_depth: depth, ..TreeParams::default() }).unwrap();
        let (_, var) = reg_mean_var(&tree.predict(&ds.without_column("x2").unwrap()).unwrap()).unwrap();
        prop_assert!(var >= 0.0);
    }

    #[test]
    fn di_interval_brackets_estimate(
        n0 in 1usize..500,
        n1 in 1usize..500,
        f0 in 0.0f64..=1.0,
        f1 in 0.0f64..=1.0,
        confidence in 0.5f64..0.999,
    ) {
        let k0 = (f0 * n0 as f64).round() as usize;
        let k1 = ((f1 * n1 as f64).round() as usize).max(1);
        let di = disparate_impact(GroupCounts { n0, k0, n1, k1 }, confidence).unwrap();
        prop_assert!(di.di >= 0.0);
        prop_assert!(di.lo <= di.di && di.di <= di.hi, "{:?}", di);
        prop_assert!(di.lo >= 0.0 && di.hi.is_finite());
        if k0 > 0 {
            prop_assert!(di.lo > 0.0);
        }
    }

    #[test]
    fn unstressed_level_reports_the_baseline(seed in any::<u64>(), n in 10usize..80, half in 1usize..5) {
        let train = gaussian(seed, n, 3);
        let labels: Vec<f64> = train.rows().map(|r| (r[0] + r[1] > 0.0) as u8 as f64).collect();
        let rows: Vec<Vec<f64>> = train.rows().zip(&labels).map(|(r, &y)| vec![r[0], r[1], y]).collect();
        let train = EmpiricalDataset::new(vec!["a".into(), "b".into(), "y".into()], rows).unwrap();
        let model = fit_tree(&train, "y", Task::Classification, TreeParams::default()).unwrap();

        let test = gaussian(seed ^ 3, n, 2);
        let test = EmpiricalDataset::new(vec!["a".into(), "b".into()], test.rows().map(|r| r.to_vec()).collect()).unwrap();
        let sweep = make_sweep(&test, 0, 2 * half + 1, 0.05).unwrap();
        let outputs = run_sweep(&test, &sweep, Mode::Equality, &SolverOptions::default());
        let series = series_over_sweep(std::slice::from_ref(&model), &sweep, &outputs, &MetricKind::Pp1, 0.95).unwrap();
        let baseline = pp1(&model.predict(&test).unwrap()).unwrap();
        prop_assert_eq!(series[0].values[half].to_bits(), baseline.to_bits());
        prop_assert!(series[0].values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn csv_row_order_does_not_change_moments(seed in any::<u64>(), n in 1usize..40) {
        let ds = dyadic(seed, n, 2);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let text = |idx: &[usize]| {
            let mut s = String::from("x0,x1\n");
            for &i in idx {
                let r = ds.row(i);
                s.push_str(&format!("{},{}\n", r[0], r[1]));
            }
            s
        };
        let a = read_csv(text(&(0..n).collect::<Vec<_>>()).as_bytes(), None).unwrap().dataset;
        let b = read_csv(text(&order).as_bytes(), None).unwrap().dataset;
        for j in 0..2 {
            prop_assert_eq!(a.column_mean(j).unwrap(), b.column_mean(j).unwrap());
            prop_assert_eq!(a.empirical_quantile(j, 0.3).unwrap(), b.empirical_quantile(j, 0.3).unwrap());
            prop_assert_eq!(a.column_stat(j, 0.05).unwrap(), b.column_stat(j, 0.05).unwrap());
        }
    }
}
