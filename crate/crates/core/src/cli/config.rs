//! Experiment configuration: a flat TOML file merged with command-line flags.
//!
//! Grammar (every key optional in the file, flags take precedence):
//!
//! ```toml
//! data = "census.csv"
//! columns = ["age", "income"]     # numeric columns to load; default all
//! target = "income"
//! task = "cls"                    # or "reg"
//! sensitive = "sex"
//! models = ["builtin:tree:4", "builtin:nb"]
//! features = ["age", "hours_per_week"]
//! taus = 21
//! alpha = 0.05
//! mode = "eq"                     # or "ge"
//! tol = 1e-8
//! max_iter = 10000
//! seed = 0
//! train_fraction = 0.8
//! confidence = 0.95
//! out = "report"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::constraints::Mode;
use crate::dataset::EmpiricalDataset;
use crate::error::{Error, Result};
use crate::models::Task;
use crate::solver::SolverOptions;
use crate::stress::{DEFAULT_ALPHA, DEFAULT_TAUS};

/// Everything a config file may set. Absent keys fall back to flags, then
/// to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub columns: Option<Vec<String>>,
    pub target: Option<String>,
    pub task: Option<String>,
    pub sensitive: Option<String>,
    pub models: Option<Vec<String>>,
    pub features: Option<Vec<String>>,
    pub taus: Option<usize>,
    pub alpha: Option<f64>,
    pub mode: Option<String>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub confidence: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fills every key unset in `self` from `fallback`.
    pub fn or(self, fallback: ConfigFile) -> ConfigFile {
        ConfigFile {
            data: self.data.or(fallback.data),
            columns: self.columns.or(fallback.columns),
            target: self.target.or(fallback.target),
            task: self.task.or(fallback.task),
            sensitive: self.sensitive.or(fallback.sensitive),
            models: self.models.or(fallback.models),
            features: self.features.or(fallback.features),
            taus: self.taus.or(fallback.taus),
            alpha: self.alpha.or(fallback.alpha),
            mode: self.mode.or(fallback.mode),
            tol: self.tol.or(fallback.tol),
            max_iter: self.max_iter.or(fallback.max_iter),
            seed: self.seed.or(fallback.seed),
            train_fraction: self.train_fraction.or(fallback.train_fraction),
            confidence: self.confidence.or(fallback.confidence),
            out: self.out.or(fallback.out),
        }
    }
}

/// How to obtain one predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Tree { max_depth: usize },
    NaiveBayes,
    Threshold { column: String, cutoff: f64 },
    Constant { value: f64 },
    External { command: String },
}

impl ModelSpec {
    /// Parses `builtin:tree[:depth]`, `builtin:nb`,
    /// `builtin:threshold:<col>:<c>`, `builtin:constant:<v>` or
    /// `external:<command>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized model spec `{s}`"));
        if let Some(command) = s.strip_prefix("external:") {
            if command.trim().is_empty() {
                return Err(bad());
            }
            return Ok(ModelSpec::External {
                command: command.to_string(),
            });
        }
        let rest = s.strip_prefix("builtin:").ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        let number = |p: &str| p.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        match parts.as_slice() {
            ["tree"] => Ok(ModelSpec::Tree { max_depth: 5 }),
            ["tree", depth] => Ok(ModelSpec::Tree {
                max_depth: depth.parse().map_err(|_| bad())?,
            }),
            ["nb"] => Ok(ModelSpec::NaiveBayes),
            ["threshold", column, cutoff] => Ok(ModelSpec::Threshold {
                column: column.to_string(),
                cutoff: number(cutoff)?,
            }),
            ["constant", value] => Ok(ModelSpec::Constant {
                value: number(value)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub columns: Option<Vec<String>>,
    pub target: String,
    pub task: Task,
    pub sensitive: Option<String>,
    /// `(spec string, parsed spec)`; the string names the model in reports.
    pub models: Vec<(String, ModelSpec)>,
    pub features: Vec<String>,
    pub taus: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub confidence: f64,
    pub out: PathBuf,
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "eq" => Ok(Mode::Equality),
        "ge" => Ok(Mode::InequalityGe),
        _ => Err(Error::Config(format!("mode must be `eq` or `ge`, got `{s}`"))),
    }
}

impl ExperimentConfig {
    /// Applies defaults and checks everything that does not need the data.
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let missing = |key: &str| Error::Config(format!("missing required setting `{key}`"));
        let task = match file.task.as_deref() {
            None => Task::Classification,
            Some(s) => Task::from_wire(s)
                .map_err(|_| Error::Config(format!("task must be `cls` or `reg`, got `{s}`")))?,
        };
        let models = file
            .models
            .ok_or_else(|| missing("models"))?
            .into_iter()
            .map(|s| ModelSpec::parse(&s).map(|m| (s, m)))
            .collect::<Result<Vec<_>>>()?;
        if models.is_empty() {
            return Err(missing("models"));
        }
        let features = file.features.ok_or_else(|| missing("features"))?;
        if features.is_empty() {
            return Err(missing("features"));
        }
        let config = ExperimentConfig {
            data: file.data.ok_or_else(|| missing("data"))?,
            columns: file.columns,
            target: file.target.ok_or_else(|| missing("target"))?,
            task,
            sensitive: file.sensitive,
            models,
            features,
            taus: file.taus.unwrap_or(DEFAULT_TAUS),
            alpha: file.alpha.unwrap_or(DEFAULT_ALPHA),
            mode: parse_mode(file.mode.as_deref().unwrap_or("eq"))?,
            tol: file.tol.unwrap_or(SolverOptions::default().closed_form_tol),
            max_iter: file.max_iter.unwrap_or(SolverOptions::default().max_iter),
            seed: file.seed.unwrap_or(0),
            train_fraction: file.train_fraction.unwrap_or(0.8),
            confidence: file.confidence.unwrap_or(0.95),
            out: file.out.unwrap_or_else(|| PathBuf::from("report")),
        };
        config.check_values()?;
        Ok(config)
    }

    fn check_values(&self) -> Result<()> {
        if self.taus < 3 || self.taus.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "taus must be odd and at least 3, got {}",
                self.taus
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        for (name, spec) in &self.models {
            match spec {
                ModelSpec::NaiveBayes | ModelSpec::Threshold { .. } if self.task == Task::Regression => {
                    return Err(Error::Config(format!(
                        "model `{name}` only supports classification"
                    )));
                }
                ModelSpec::Tree { max_depth: 0 } => {
                    return Err(Error::Config(format!("model `{name}` needs a positive depth")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Checks every referenced column against the loaded data.
    pub fn check_columns(&self, ds: &EmpiricalDataset) -> Result<()> {
        ds.column_index(&self.target)?;
        for f in &self.features {
            ds.column_index(f)?;
            if *f == self.target {
                return Err(Error::Config(format!(
                    "`{f}` is the target and cannot be stressed"
                )));
            }
        }
        if let Some(s) = &self.sensitive {
            ds.column_index(s)?;
            if *s == self.target {
                return Err(Error::Config(format!("sensitive column `{s}` is the target")));
            }
            if self.features.contains(s) {
                return Err(Error::Config(format!(
                    "sensitive column `{s}` cannot be stressed"
                )));
            }
        }
        for (name, spec) in &self.models {
            if let ModelSpec::Threshold { column, .. } = spec {
                if *column == self.target {
                    return Err(Error::Config(format!("model `{name}` thresholds the target")));
                }
                ds.column_index(column)?;
            }
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions::with_tol(self.tol).max_iter(self.max_iter)
    }
}
