//! Black-box predictors behind one interface.
//!
//! Built-in models are deterministic and immutable after fitting. External
//! models run in a child process and speak the line protocol in
//! [`protocol`].

pub mod naive_bayes;
pub mod protocol;
pub mod tree;

use std::fmt;

use crate::dataset::EmpiricalDataset;
use crate::error::{Error, Result};

pub use naive_bayes::{fit_naive_bayes, GaussianNaiveBayes};
pub use protocol::ExternalModel;
pub use tree::{fit_tree, DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Regression,
}

impl Task {
    /// Wire name: `cls` or `reg`.
    pub fn wire_name(self) -> &'static str {
        match self {
            Task::Classification => "cls",
            Task::Regression => "reg",
        }
    }

    pub fn from_wire(s: &str) -> Result<Self> {
        match s {
            "cls" => Ok(Task::Classification),
            "reg" => Ok(Task::Regression),
            other => Err(Error::Protocol(format!("unknown task `{other}`"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `1{x_j >= c}`
    Ge,
    /// `1{x_j < c}`
    Lt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdModel {
    pub column: usize,
    pub cutoff: f64,
    pub direction: Direction,
}

impl ThresholdModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let above = row[self.column] >= self.cutoff;
        match (self.direction, above) {
            (Direction::Ge, true) | (Direction::Lt, false) => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug)]
pub enum ModelKind {
    Tree(DecisionTree),
    NaiveBayes(GaussianNaiveBayes),
    Threshold(ThresholdModel),
    External(ExternalModel),
}

/// A fitted or connected predictor.
#[derive(Debug)]
pub struct ModelHandle {
    pub name: String,
    pub kind: ModelKind,
    pub task: Task,
    pub feature_names: Vec<String>,
}

/// Predictions for a batch of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    pub values: Vec<f64>,
}

impl PredictionBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl ModelHandle {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    /// Predicts row-major `values` whose width is the number of features.
    pub fn predict_values(&self, values: &[f64]) -> Result<PredictionBatch> {
        let d = self.d();
        if d == 0 || !values.len().is_multiple_of(d) {
            return Err(Error::Model(format!(
                "{} values do not form rows of {d} features",
                values.len()
            )));
        }
        let rows = values.chunks_exact(d);
        let out = match &self.kind {
            ModelKind::Tree(t) => rows.map(|r| t.predict_row(r)).collect(),
            ModelKind::NaiveBayes(nb) => rows.map(|r| nb.predict_row(r)).collect(),
            ModelKind::Threshold(m) => rows.map(|r| m.predict_row(r)).collect(),
            ModelKind::External(ext) => ext.predict(values, d)?,
        };
        Ok(PredictionBatch { values: out })
    }

    /// Predicts a dataset, picking the model's features by name.
    pub fn predict(&self, ds: &EmpiricalDataset) -> Result<PredictionBatch> {
        let names: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        if ds.column_names() == self.feature_names.as_slice() {
            return self.predict_values(ds.values());
        }
        let selected = ds.select_columns(&names)?;
        self.predict_values(selected.values())
    }
}

/// `1{x_j >= c}` (or its complement) on features `feature_names`.
pub fn threshold_model(
    feature_names: &[String],
    column: usize,
    cutoff: f64,
    direction: Direction,
) -> Result<ModelHandle> {
    if column >= feature_names.len() {
        return Err(Error::ColumnOutOfRange {
            index: column,
            d: feature_names.len(),
        });
    }
    Ok(ModelHandle {
        name: format!("threshold({}>={cutoff})", feature_names[column]),
        kind: ModelKind::Threshold(ThresholdModel {
            column,
            cutoff,
            direction,
        }),
        task: Task::Classification,
        feature_names: feature_names.to_vec(),
    })
}

/// Predicts `value` everywhere.
pub fn constant_model(feature_names: &[String], task: Task, value: f64) -> ModelHandle {
    ModelHandle {
        name: format!("constant({value})"),
        kind: ModelKind::Tree(DecisionTree::constant(value)),
        task,
        feature_names: feature_names.to_vec(),
    }
}

/// Splits `train` into feature rows and the target column.
pub(crate) fn features_and_target(
    train: &EmpiricalDataset,
    target_column: &str,
    task: Task,
) -> Result<(EmpiricalDataset, Vec<f64>)> {
    let j = train.column_index(target_column)?;
    let target = train.column(j)?;
    if task == Task::Classification {
        if let Some(bad) = target.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::Model(format!(
                "classification target `{target_column}` has value {bad}, expected 0 or 1"
            )));
        }
    }
    let features = train.without_column(target_column)?;
    Ok((features, target))
}
