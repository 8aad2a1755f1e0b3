//! Gaussian naive Bayes for binary labels.

use super::{features_and_target, ModelHandle, ModelKind, Task};
use crate::dataset::EmpiricalDataset;
use crate::error::{Error, Result};

/// Lower bound on every per-class feature variance.
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNaiveBayes {
    /// `log P(class)` for classes 0 and 1.
    log_prior: [f64; 2],
    means: [Vec<f64>; 2],
    variances: [Vec<f64>; 2],
}

impl GaussianNaiveBayes {
    fn log_posterior(&self, class: usize, row: &[f64]) -> f64 {
        let ll: f64 = row
            .iter()
            .zip(&self.means[class])
            .zip(&self.variances[class])
            .map(|((x, m), v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
            .sum();
        self.log_prior[class] + ll
    }

    /// Class with the larger posterior; ties go to 0.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        if self.log_posterior(1, row) > self.log_posterior(0, row) {
            1.0
        } else {
            0.0
        }
    }
}

pub fn fit_naive_bayes(train: &EmpiricalDataset, target_column: &str) -> Result<ModelHandle> {
    let (x, y) = features_and_target(train, target_column, Task::Classification)?;
    let d = x.d();
    let mut counts = [0usize; 2];
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    for (row, &label) in x.rows().zip(&y) {
        let c = label as usize;
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    if counts.contains(&0) {
        return Err(Error::Model(format!(
            "naive Bayes needs both classes, got counts {counts:?}"
        )));
    }
    let means = [0, 1].map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>());
    let mut sq = [vec![0.0; d], vec![0.0; d]];
    for (row, &label) in x.rows().zip(&y) {
        let c = label as usize;
        for ((acc, v), m) in sq[c].iter_mut().zip(row).zip(&means[c]) {
            *acc += (v - m) * (v - m);
        }
    }
    let variances = [0, 1].map(|c| {
        sq[c]
            .iter()
            .map(|s| (s / counts[c] as f64).max(VARIANCE_FLOOR))
            .collect::<Vec<_>>()
    });
    let n = y.len() as f64;
    let model = GaussianNaiveBayes {
        log_prior: [0, 1].map(|c| (counts[c] as f64 / n).ln()),
        means,
        variances,
    };
    Ok(ModelHandle {
        name: "naive_bayes".into(),
        kind: ModelKind::NaiveBayes(model),
        task: Task::Classification,
        feature_names: x.column_names().to_vec(),
    })
}
