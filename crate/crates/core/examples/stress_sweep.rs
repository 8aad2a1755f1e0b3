// The full stress protocol on the bundled census-like data: train two
// classifiers, shift the mean of `age` across 21 stress levels on the test
// split, and track the share of positive predictions.

use wasserstress::cli::render_svg;
use wasserstress::constraints::Mode;
use wasserstress::dataset::load_csv;
use wasserstress::metrics::{series_over_sweep, MetricKind};
use wasserstress::models::{fit_naive_bayes, fit_tree, Task, TreeParams};
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
    let ds = load_csv(DATA, Some(&NUMERIC))?.dataset;
    let (train, test) = ds.split(0.8, 0)?;
    let params = TreeParams {
        max_depth: 4,
        ..TreeParams::default()
    };
    let models = vec![
        fit_tree(&train, "income", Task::Classification, params)?.with_name("tree"),
        fit_naive_bayes(&train, "income")?.with_name("naive bayes"),
    ];

    let x = test.without_column("income")?;
    let age = x.column_index("age")?;
    let sweep = make_sweep(&x, age, 21, 0.05)?;
    let outputs = run_sweep(&x, &sweep, Mode::Equality, &SolverOptions::default());
    let series = series_over_sweep(&models, &sweep, &outputs, &MetricKind::Pp1, 0.95)?;

    println!("{:>6} {:>8} {:>8} {:>12}", "tau", "age", "tree", "naive bayes");
    for i in 0..sweep.taus.len() {
        println!(
            "{:>6.2} {:>8.2} {:>8.3} {:>12.3}",
            sweep.taus[i], sweep.targets[i], series[0].values[i], series[1].values[i]
        );
    }
    let svg = render_svg(&series, "PP1 under stress on age", "pp1")?;
    let path = std::env::temp_dir().join("wasserstress_pp1_age.svg");
    std::fs::write(&path, svg)?;
    println!("chart written to {}", path.display());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
