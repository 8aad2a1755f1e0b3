// Shift one column's mean by projecting onto a linear moment constraint.
//
// The optimal map is a uniform translation of the constrained column, the
// multiplier is `2 (t - m)` and the transport cost is `(t - m)^2`.

use wasserstress::constraints::{ConstraintSpec, Family, Mode};
use wasserstress::dataset::EmpiricalDataset;
use wasserstress::projection::project;
use wasserstress::solver::SolverOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = EmpiricalDataset::new(
        vec!["age".into(), "hours".into()],
        vec![
            vec![23.0, 40.0],
            vec![35.0, 45.0],
            vec![41.0, 38.0],
            vec![52.0, 50.0],
            vec![64.0, 20.0],
        ],
    )?;
    let m = ds.column_mean(0)?;
    let t = m + 5.0;
    let spec = ConstraintSpec::new(Family::Linear(vec![0]), vec![t], Mode::Equality)?;
    let proj = project(&ds, &spec, &SolverOptions::default())?;

    println!("mean age {m} -> target {t}");
    println!(
        "lambda = {:?} (2 (t - m) = {})",
        proj.multiplier.lambda,
        2.0 * (t - m)
    );
    println!(
        "squared cost = {} ((t - m)^2 = {})",
        proj.squared_cost,
        (t - m) * (t - m)
    );
    for (before, after) in ds.rows().zip(proj.rows.rows()) {
        println!("{before:?} -> {after:?}");
    }
    assert_eq!(proj.rows.column_mean(0)?, t);
    assert_eq!(proj.rows.column(1)?, ds.column(1)?);

    let mut csv = Vec::new();
    proj.write_csv(&mut csv, None)?;
    print!("{}", String::from_utf8(csv)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
