// A threshold rule reacts monotonically to a mean shift on its own
// feature; so does a tree trained on data where the label grows with it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasserstress::constraints::Mode;
use wasserstress::dataset::EmpiricalDataset;
use wasserstress::metrics::{series_over_sweep, spearman, MetricKind};
use wasserstress::models::{fit_tree, threshold_model, Direction, Task, TreeParams};
use wasserstress::solver::SolverOptions;
use wasserstress::stress::{make_sweep, run_sweep};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..600)
        .map(|_| {
            let x: f64 = rng.random_range(0.0..10.0);
            let z: f64 = rng.random_range(0.0..1.0);
            let y = f64::from(u8::from(rng.random_bool((x / 10.0).clamp(0.02, 0.98))));
            vec![x, z, y]
        })
        .collect();
    let ds = EmpiricalDataset::new(vec!["x".into(), "z".into(), "y".into()], rows)?;
    let (train, test) = ds.split(0.8, 1)?;
    let features = test.without_column("y")?;
    let names = features.column_names().to_vec();

    let models = vec![
        threshold_model(&names, 0, 5.0, Direction::Ge)?,
        fit_tree(
            &train,
            "y",
            Task::Classification,
            TreeParams {
                max_depth: 3,
                ..TreeParams::default()
            },
        )?
        .with_name("tree(depth 3)"),
    ];
    let sweep = make_sweep(&features, 0, 21, 0.05)?;
    let outputs = run_sweep(&features, &sweep, Mode::Equality, &SolverOptions::default());
    let series = series_over_sweep(&models, &sweep, &outputs, &MetricKind::Pp1, 0.95)?;
    for s in &series {
        let rho = spearman(&s.taus, &s.values);
        let nondecreasing = s.values.windows(2).all(|w| w[0] <= w[1]);
        println!(
            "{}: spearman {rho:.3}, nondecreasing {nondecreasing}",
            s.model_name
        );
        println!(
            "  {:?}",
            s.values
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
