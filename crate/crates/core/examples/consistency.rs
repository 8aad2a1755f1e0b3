// Projections of subsamples approach the projection of the full sample as
// the subsample grows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wasserstress::constraints::{ConstraintSpec, Family, Mode};
use wasserstress::dataset::EmpiricalDataset;
use wasserstress::metrics::spearman;
use wasserstress::projection::{consistency_curve, Resampling};
use wasserstress::solver::SolverOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            vec![a, 0.6 * a + 0.8 * b]
        })
        .collect();
    let ds = EmpiricalDataset::new(vec!["x".into(), "y".into()], rows)?;
    let spec = ConstraintSpec::new(Family::Linear(vec![0, 1]), vec![0.5, -0.25], Mode::Equality)?;
    let sizes = [50, 100, 200, 400];
    let seeds: Vec<u64> = (0..10).collect();
    let curve = consistency_curve(
        &ds,
        &spec,
        &sizes,
        &seeds,
        Resampling::WithReplacement,
        &SolverOptions::default(),
    )?;
    for p in &curve {
        println!("n = {:>3}: median W2^2 {:.5}", p.size, p.median);
    }
    let x: Vec<f64> = curve.iter().map(|p| p.size as f64).collect();
    let y: Vec<f64> = curve.iter().map(|p| p.median).collect();
    println!("spearman(size, median) = {}", spearman(&x, &y));
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
