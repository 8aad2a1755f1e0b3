// `E[phi] >= t` constraints: a target the data already meets costs nothing,
// an active one behaves like the equality projection with `lambda >= 0`.

use wasserstress::constraints::{ConstraintSpec, Family, Mode};
use wasserstress::dataset::EmpiricalDataset;
use wasserstress::projection::project;
use wasserstress::solver::SolverOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = EmpiricalDataset::new(
        vec!["x".into(), "y".into()],
        vec![vec![-1.0, 0.5], vec![0.0, 1.5], vec![1.0, -0.5], vec![2.0, 0.5]],
    )?;
    let opts = SolverOptions::default();
    for (family, target) in [
        (Family::Linear(vec![0]), vec![0.0]),
        (Family::Linear(vec![0]), vec![1.5]),
        (Family::LinearQuadratic(0), vec![0.0, 6.0]),
        (Family::LinearQuadratic(0), vec![2.0, 9.0]),
    ] {
        let spec = ConstraintSpec::new(family.clone(), target.clone(), Mode::InequalityGe)?;
        let proj = project(&ds, &spec, &opts)?;
        let slack: f64 = proj
            .multiplier
            .lambda
            .iter()
            .zip(&proj.multiplier.residual)
            .map(|(l, r)| l * r)
            .sum();
        println!(
            "{} >= {target:?}: lambda {:?}, residual {:?}, lambda . residual {slack:.1e}, cost {}",
            family.name(),
            proj.multiplier.lambda,
            proj.multiplier.residual,
            proj.squared_cost
        );
        assert!(proj.multiplier.lambda.iter().all(|&l| l >= 0.0));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
