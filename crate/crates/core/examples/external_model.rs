// Drive an out-of-process predictor over the line protocol. The predictor
// here is a small shell script implementing `1{age >= 40}`; any executable
// speaking the protocol on stdin/stdout works the same way.

use wasserstress::dataset::load_csv;
use wasserstress::models::{threshold_model, Direction, ExternalModel, Task};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/census_synthetic.csv");

const SHELL_MODEL: &str = r#"
while IFS= read -r line; do
    case "$line" in
        HELLO*) IFS= read -r names; echo READY ;;
        PREDICT*)
            n=${line#PREDICT }; rows=""
            while [ "$n" -gt 0 ]; do IFS= read -r row; rows="$rows$row
"; n=$((n - 1)); done
            printf '%s' "$rows" | awk -F, '{ print ($1 >= 40 ? 1 : 0) }'
            echo END ;;
        QUIT) exit 0 ;;
    esac
done"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ds = load_csv(DATA, Some(&["age", "education_num", "hours_per_week"]))?.dataset;
    let names = ds.column_names().to_vec();
    let external = ExternalModel::spawn(SHELL_MODEL, Task::Classification, &names)?;
    let builtin = threshold_model(&names, 0, 40.0, Direction::Ge)?;
    let a = external.predict(&ds)?;
    let b = builtin.predict(&ds)?;
    let agree = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    println!("external and built-in agree on {agree} of {} rows", ds.n());
    assert_eq!(a, b);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
