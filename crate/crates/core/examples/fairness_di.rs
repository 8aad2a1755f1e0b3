// Disparate impact of a classifier as the mean education level of the test
// population is stressed. `sex = 1` is the reference group.

use wasserstress::constraints::Mode;
use wasserstress::dataset::load_csv;
use wasserstress::metrics::{disparate_impact, series_over_sweep, GroupCounts, MetricKind};
use wasserstress::models::{fit_tree, PredictionBatch, Task, TreeParams};
use wasserstress::solver::SolverOptions;
use wasserstress::stress::{make_sweep, run_sweep};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/census_synthetic.csv");
const NUMERIC: [&str; 6] = [
    "age",
    "education_num",
    "sex",
    "capital_gain",
    "hours_per_week",
    "income",
];

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // equal groups: DI is exactly one
    let preds = PredictionBatch {
        values: vec![1.0, 0.0, 1.0, 0.0],
    };
    let equal = disparate_impact(
        GroupCounts::from_predictions(&preds, &[0.0, 0.0, 1.0, 1.0])?,
        0.95,
    )?;
    println!(
        "equal groups: DI {} in [{:.3}, {:.3}]",
        equal.di, equal.lo, equal.hi
    );

    let ds = load_csv(DATA, Some(&NUMERIC))?.dataset;
    let (train, test) = ds.split(0.8, 0)?;
    let tree = fit_tree(&train, "income", Task::Classification, TreeParams::default())?.with_name("tree");
    let x = test.without_column("income")?;
    let sweep = make_sweep(&x, x.column_index("education_num")?, 21, 0.05)?;
    let outputs = run_sweep(&x, &sweep, Mode::Equality, &SolverOptions::default());
    let metric = MetricKind::DisparateImpact {
        sensitive: "sex".into(),
    };
    let series = series_over_sweep(&[tree], &sweep, &outputs, &metric, 0.95)?;
    let s = &series[0];
    let (lo, hi) = (s.lower_ci.as_ref().unwrap(), s.upper_ci.as_ref().unwrap());
    for i in 0..s.taus.len() {
        let mark = if s.taus[i] == 0.0 { " *" } else { "" };
        println!(
            "tau {:>5.2}: DI {:.3} [{:.3}, {:.3}]{mark}",
            s.taus[i], s.values[i], lo[i], hi[i]
        );
    }
    for (i, msg) in &s.failures {
        println!("tau {}: {msg}", s.taus[*i]);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
