// All six constraint families on one dataset. Targets are generated by
// pushing the data through a known multiplier, so every target is
// attainable and the solver should recover that multiplier.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wasserstress::constraints::{ConstraintSpec, Family, Mode};
use wasserstress::dataset::EmpiricalDataset;
use wasserstress::solver::{certify, solve, SolverOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..150)
        .map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let ds = EmpiricalDataset::new(vec!["a".into(), "b".into(), "c".into()], rows)?;

    let cases = [
        (Family::Linear(vec![0, 2]), vec![0.8, -0.4]),
        (Family::Norm, vec![0.3]),
        (Family::Quadratic(vec![1]), vec![-0.5]),
        (Family::LinearQuadratic(2), vec![0.4, 0.2]),
        (Family::CrossProduct(0, 1), vec![0.6]),
        (Family::LinearCross(1, 2), vec![0.3, -0.2, 0.5]),
    ];
    let opts = SolverOptions::default();
    println!(
        "{:<16} {:<11} {:>10} {:>12}  lambda",
        "family", "method", "residual", "gap"
    );
    for (family, lambda_true) in cases {
        let mut target = vec![0.0; family.k()];
        for y in ds.rows() {
            let x = family.transport_map(&lambda_true, y)?;
            for (t, p) in target.iter_mut().zip(family.phi(&x)) {
                *t += p / ds.n() as f64;
            }
        }
        let spec = ConstraintSpec::new(family.clone(), target, Mode::Equality)?;
        let m = solve(&ds, &spec, &opts)?;
        let cert = certify(&ds, &spec, &m)?;
        println!(
            "{:<16} {:<11} {:>10.2e} {:>12.2e}  {:?} (planted {:?})",
            family.name(),
            format!("{:?}", m.method),
            m.residual_norm(),
            cert.gap,
            m.lambda,
            lambda_true
        );
        for (a, b) in m.lambda.iter().zip(&lambda_true) {
            assert!((a - b).abs() < 1e-4, "{}: {a} vs {b}", family.name());
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
