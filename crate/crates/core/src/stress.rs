//! Quantile-anchored stress targets and sweeps of mean projections.
//!
//! For a column `j` with mean `m`, the stress level `tau` in `[-1, 1]` moves
//! the target mean linearly from the `alpha` quantile (`tau = -1`) through
//! `m` (`tau = 0`) to the `1 - alpha` quantile (`tau = 1`).

use rayon::prelude::*;

use crate::constraints::{ConstraintSpec, Family, Mode};
use crate::dataset::{ColumnStat, EmpiricalDataset};
use crate::error::{Error, Result};
use crate::projection::{project, ProjectedDataset};
use crate::solver::SolverOptions;

/// Default number of stress levels.
pub const DEFAULT_TAUS: usize = 21;
/// Default quantile level.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct StressSweep {
    pub column: usize,
    pub alpha: f64,
    pub taus: Vec<f64>,
    pub targets: Vec<f64>,
    pub baseline_mean: f64,
    pub q_lo: f64,
    pub q_hi: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside [-1, 1]")));
    }
    Ok(())
}

/// Target mean at stress level `tau` given the column summary.
pub fn target_from_stat(stat: &ColumnStat, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    // endpoints are returned verbatim so they match the quantiles bit for bit
    Ok(if tau == -1.0 {
        stat.quantile_lo
    } else if tau == 1.0 {
        stat.quantile_hi
    } else if tau < 0.0 {
        stat.mean + tau * (stat.mean - stat.quantile_lo)
    } else if tau > 0.0 {
        stat.mean + tau * (stat.quantile_hi - stat.mean)
    } else {
        stat.mean
    })
}

pub fn stress_target(ds: &EmpiricalDataset, j: usize, tau: f64, alpha: f64) -> Result<f64> {
    check_tau(tau)?;
    target_from_stat(&ds.column_stat(j, alpha)?, tau)
}

/// `count` evenly spaced levels over `[-1, 1]`; `count` must be odd so that
/// 0 is on the grid.
pub fn tau_grid(count: usize) -> Result<Vec<f64>> {
    if count < 3 || count.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "stress level count must be odd and at least 3, got {count}"
        )));
    }
    let half = (count - 1) as i64 / 2;
    Ok((-half..=half).map(|i| i as f64 / half as f64).collect())
}

pub fn make_sweep(ds: &EmpiricalDataset, j: usize, count: usize, alpha: f64) -> Result<StressSweep> {
    let taus = tau_grid(count)?;
    let stat = ds.column_stat(j, alpha)?;
    let targets = taus
        .iter()
        .map(|&tau| target_from_stat(&stat, tau))
        .collect::<Result<_>>()?;
    Ok(StressSweep {
        column: j,
        alpha,
        taus,
        targets,
        baseline_mean: stat.mean,
        q_lo: stat.quantile_lo,
        q_hi: stat.quantile_hi,
    })
}

/// One mean projection per stress level, ordered like `sweep.taus`. A level
/// whose projection fails keeps its error and the sweep continues.
pub fn run_sweep<'a>(
    ds: &'a EmpiricalDataset,
    sweep: &StressSweep,
    mode: Mode,
    opts: &SolverOptions,
) -> Vec<Result<ProjectedDataset<'a>>> {
    sweep
        .targets
        .par_iter()
        .map(|&t| {
            let spec = ConstraintSpec::new(Family::Linear(vec![sweep.column]), vec![t], mode)?;
            project(ds, &spec, opts)
        })
        .collect()
}
