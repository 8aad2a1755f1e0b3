// Compare a projection with exact optimal transport and with feasible
// competitors built by jittering the data and pulling it back onto the
// constraint set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wasserstress::constraints::{ConstraintSpec, Family, Mode};
use wasserstress::dataset::EmpiricalDataset;
use wasserstress::projection::{exact_w2_small, optimality_check, project};
use wasserstress::solver::SolverOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 1.0)?;
    let rows: Vec<Vec<f64>> = (0..48)
        .map(|_| vec![noise.sample(&mut rng), 1.0 + 0.5 * noise.sample(&mut rng)])
        .collect();
    let ds = EmpiricalDataset::new(vec!["u".into(), "v".into()], rows)?;
    let opts = SolverOptions::default();
    let spec = ConstraintSpec::new(Family::Quadratic(vec![0]), vec![1.6], Mode::Equality)?;
    let proj = project(&ds, &spec, &opts)?;

    println!("map cost   {}", proj.squared_cost);
    println!("exact W2^2 {}", exact_w2_small(&proj.rows, &ds)?);
    let report = optimality_check(&ds, &spec, &proj, 200, 5, &opts)?;
    println!(
        "{} competitors ({} skipped), cheapest {}, violations {}",
        report.trials,
        report.skipped,
        report.min_competitor_cost,
        report.violations.len()
    );
    assert!(report.passed());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
