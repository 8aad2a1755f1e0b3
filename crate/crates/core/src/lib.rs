//! Wasserstein stress testing for black-box tabular predictors.
//!
//! The empirical distribution of a dataset is projected, in squared
//! 2-Wasserstein distance, onto a set of measures satisfying a moment
//! constraint `mean phi(X) = t` (or `>= t`). The projection moves each row
//! through a closed-form transport map `T_lambda`, so a predictor can be
//! queried on the stressed rows directly and its response tracked as the
//! target moves.
//!
//! ```
//! use wasserstress::constraints::{ConstraintSpec, Family, Mode};
//! use wasserstress::dataset::EmpiricalDataset;
//! use wasserstress::projection::project;
//! use wasserstress::solver::SolverOptions;
//!
//! let ds = EmpiricalDataset::from_flat(vec!["x".into()], vec![0.0, 1.0, 2.0]).unwrap();
//! let spec = ConstraintSpec::new(Family::Linear(vec![0]), vec![2.0], Mode::Equality).unwrap();
//! let p = project(&ds, &spec, &SolverOptions::default()).unwrap();
//! assert_eq!(p.rows.values(), &[1.0, 2.0, 3.0]);
//! assert_eq!(p.squared_cost, 1.0);
//! ```
//!
//! Modules, bottom-up: [`dataset`], [`constraints`], [`solver`],
//! [`projection`], [`stress`], [`models`], [`metrics`], and the [`cli`]
//! pipeline with its report writers.

pub mod assignment;
pub mod cli;
pub mod constraints;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod models;
pub mod projection;
pub mod solver;
pub mod stress;

pub use error::{Error, Result};
