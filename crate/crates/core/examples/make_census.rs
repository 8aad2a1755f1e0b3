// Regenerates `data/census_synthetic.csv`: 1000 census-like rows with a
// planted income model.
//
// ```bash
// cargo run --example make_census -- crates/core/data/census_synthetic.csv
// ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};

const ROWS: usize = 1000;
const SEED: u64 = 1994;

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let age_shape = Beta::<f64>::new(2.0, 4.5)?;
    let education = Normal::<f64>::new(10.0, 2.5)?;
    let hours_noise = Normal::<f64>::new(0.0, 11.0)?;
    let log_gain = Normal::<f64>::new(8.5, 1.0)?;

    let mut out = String::from("age,workclass,education_num,sex,capital_gain,hours_per_week,income\n");
    for _ in 0..ROWS {
        let sex = u8::from(rng.random_bool(0.67));
        let age = (17.0 + 68.0 * age_shape.sample(&mut rng)).round();
        let edu = education.sample(&mut rng).round().clamp(1.0, 16.0);
        let hours = (40.0 + 3.0 * f64::from(sex) + hours_noise.sample(&mut rng))
            .round()
            .clamp(1.0, 99.0);
        let gain = if rng.random_bool(0.08) {
            log_gain.sample(&mut rng).exp().round()
        } else {
            0.0
        };
        let u: f64 = rng.random();
        let workclass = if u < 0.7 {
            "Private"
        } else if u < 0.82 {
            "Self-emp"
        } else {
            "Gov"
        };
        let logit = -9.0
            + 0.045 * age
            + 0.33 * edu
            + 0.035 * hours
            + 0.9 * f64::from(sex)
            + if gain > 0.0 { 1.5 } else { 0.0 };
        let income = u8::from(rng.random_bool(1.0 / (1.0 + (-logit).exp())));
        out.push_str(&format!(
            "{age},{workclass},{edu},{sex},{gain},{hours},{income}\n"
        ));
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = run_example()?;
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
