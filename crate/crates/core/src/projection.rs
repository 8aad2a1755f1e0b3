//! Projected empirical measures and the exact-transport checks around them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::assignment::min_cost_assignment;
use crate::constraints::ConstraintSpec;
use crate::dataset::EmpiricalDataset;
use crate::error::{Error, Result};
use crate::solver::{self, Multiplier, SolverOptions};

/// Largest sample size accepted by [`exact_w2_small`].
pub const MAX_EXACT_N: usize = 512;

/// Slack allowed when comparing transport costs.
pub const COST_TOL: f64 = 1e-8;

/// Jitter scale, as a fraction of each column's standard deviation, used to
/// build competing feasible measures.
const JITTER_SCALE: f64 = 0.25;

/// `T_lambda # Q_n`: every source row pushed through the transport map.
#[derive(Debug, Clone)]
pub struct ProjectedDataset<'a> {
    pub source: &'a EmpiricalDataset,
    pub spec: ConstraintSpec,
    pub rows: EmpiricalDataset,
    pub multiplier: Multiplier,
    /// `(1/n) sum_i |T(Z_i) - Z_i|^2`
    pub squared_cost: f64,
}

impl ProjectedDataset<'_> {
    /// Writes the projected rows, followed by `__tau` (when given) and
    /// `__lambda_0..k-1` provenance columns.
    pub fn write_csv<W: std::io::Write>(&self, out: W, tau: Option<f64>) -> Result<()> {
        let mut extra = Vec::new();
        if let Some(tau) = tau {
            extra.push(("__tau".to_string(), tau));
        }
        for (i, l) in self.multiplier.lambda.iter().enumerate() {
            extra.push((format!("__lambda_{i}"), *l));
        }
        self.rows.write_csv(out, &extra)
    }
}

/// Solves for the multiplier and maps every row.
pub fn project<'a>(
    ds: &'a EmpiricalDataset,
    spec: &ConstraintSpec,
    opts: &SolverOptions,
) -> Result<ProjectedDataset<'a>> {
    spec.family.validate(ds.d())?;
    let multiplier = solver::solve(ds, spec, opts)?;
    apply_multiplier(ds, spec, multiplier)
}

/// Maps `ds` with an already-solved multiplier.
pub fn apply_multiplier<'a>(
    ds: &'a EmpiricalDataset,
    spec: &ConstraintSpec,
    multiplier: Multiplier,
) -> Result<ProjectedDataset<'a>> {
    let domain = spec.multiplier_domain();
    if !domain.contains(&multiplier.lambda) {
        return Err(Error::OutsideDomain {
            lambda: multiplier.lambda.clone(),
            domain: domain.to_string(),
        });
    }
    let mut data = ds.values().to_vec();
    let mut cost = 0.0;
    for (out, y) in data.chunks_exact_mut(ds.d()).zip(ds.rows()) {
        spec.family.transport_into(&multiplier.lambda, y, out);
        cost += out.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(ProjectedDataset {
        source: ds,
        spec: spec.clone(),
        rows: ds.with_values(data)?,
        multiplier,
        squared_cost: cost / ds.n() as f64,
    })
}

/// Exact squared 2-Wasserstein distance between two uniform empirical
/// measures of equal size, via optimal assignment.
pub fn exact_w2_small(a: &EmpiricalDataset, b: &EmpiricalDataset) -> Result<f64> {
    if a.n() != b.n() || a.d() != b.d() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.n(),
            a.d(),
            b.n(),
            b.d()
        )));
    }
    let n = a.n();
    if n > MAX_EXACT_N {
        return Err(Error::InvalidArgument(format!(
            "exact transport limited to {MAX_EXACT_N} points, got {n}"
        )));
    }
    let mut cost = Vec::with_capacity(n * n);
    for x in a.rows() {
        for y in b.rows() {
            cost.push(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>());
        }
    }
    let (_, total) = min_cost_assignment(&cost, n);
    Ok(total / n as f64)
}

/// A competitor that beat the projection, with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    /// `squared_cost` of the projection.
    pub map_cost: f64,
    /// Exact optimal-transport cost between projection and source.
    pub exact_cost: f64,
    /// The identity coupling is optimal within [`COST_TOL`].
    pub coupling_optimal: bool,
    pub trials: usize,
    /// Trials whose recalibration failed (target out of reach after jitter).
    pub skipped: usize,
    pub min_competitor_cost: f64,
    pub violations: Vec<Violation>,
}

impl OptimalityReport {
    pub fn passed(&self) -> bool {
        self.coupling_optimal && self.violations.is_empty()
    }
}

/// True if `competitor` costs at least as much as the projection, up to
/// [`COST_TOL`].
pub fn no_better_than(proj: &ProjectedDataset<'_>, competitor: &EmpiricalDataset) -> Result<bool> {
    Ok(exact_w2_small(competitor, proj.source)? >= proj.squared_cost - COST_TOL)
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial as u64)
}

/// Jitters every row, then recalibrates onto the constraint set with the
/// same solver. The result satisfies the constraint.
pub fn feasible_competitor(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    seed: u64,
    opts: &SolverOptions,
) -> Result<EmpiricalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = (0..ds.d())
        .map(|j| ds.column_std(j).map(|s| JITTER_SCALE * s))
        .collect::<Result<Vec<_>>>()?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut data = ds.values().to_vec();
    for row in data.chunks_exact_mut(ds.d()) {
        for (v, s) in row.iter_mut().zip(&scales) {
            *v += s * std_normal.sample(&mut rng);
        }
    }
    let jittered = ds.with_values(data)?;
    Ok(project(&jittered, spec, opts)?.rows)
}

/// Checks that the projection is an optimal coupling and that no jittered
/// feasible competitor is closer to the source.
pub fn optimality_check(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    proj: &ProjectedDataset<'_>,
    trials: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<OptimalityReport> {
    let exact_cost = exact_w2_small(&proj.rows, ds)?;
    let results: Vec<(usize, u64, Option<f64>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let s = trial_seed(seed, trial);
            let cost = feasible_competitor(ds, spec, s, opts)
                .ok()
                .map(|c| exact_w2_small(&c, ds))
                .transpose();
            cost.map(|c| (trial, s, c))
        })
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    let mut skipped = 0;
    let mut min_cost = f64::INFINITY;
    for (trial, s, cost) in results {
        match cost {
            None => skipped += 1,
            Some(c) => {
                min_cost = min_cost.min(c);
                if c < proj.squared_cost - COST_TOL {
                    violations.push(Violation {
                        trial,
                        seed: s,
                        cost: c,
                    });
                }
            }
        }
    }
    Ok(OptimalityReport {
        map_cost: proj.squared_cost,
        exact_cost,
        coupling_optimal: (exact_cost - proj.squared_cost).abs() <= COST_TOL,
        trials,
        skipped,
        min_competitor_cost: min_cost,
        violations,
    })
}

/// How subsamples are drawn in [`consistency_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resampling {
    /// Bootstrap draws.
    WithReplacement,
    /// A random subset; `size = n` returns the whole sample.
    WithoutReplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyPoint {
    pub size: usize,
    /// One exact distance per seed, in seed order.
    pub distances: Vec<f64>,
    pub median: f64,
}

fn draw_indices(rng: &mut ChaCha8Rng, n: usize, size: usize, resampling: Resampling) -> Vec<usize> {
    match resampling {
        Resampling::WithReplacement => (0..size).map(|_| rng.random_range(0..n)).collect(),
        Resampling::WithoutReplacement => rand::seq::index::sample(rng, n, size).into_vec(),
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Distance between projections of subsamples and equally sized subsamples
/// of the full-data projection, for each size. The target of `spec` stays
/// fixed across sizes.
pub fn consistency_curve(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    sizes: &[usize],
    seeds: &[u64],
    resampling: Resampling,
    opts: &SolverOptions,
) -> Result<Vec<ConsistencyPoint>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    for &size in sizes {
        if size == 0 || size > ds.n() || size > MAX_EXACT_N {
            return Err(Error::InvalidArgument(format!(
                "subsample size {size} must lie in 1..={}",
                ds.n().min(MAX_EXACT_N)
            )));
        }
    }
    let full = project(ds, spec, opts)?;
    let cells: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&size| seeds.iter().map(move |&seed| (size, seed)))
        .collect();
    let distances: Vec<f64> = cells
        .par_iter()
        .map(|&(size, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, size));
            let sample = ds.select_rows(&draw_indices(&mut rng, ds.n(), size, resampling))?;
            let reference = full
                .rows
                .select_rows(&draw_indices(&mut rng, ds.n(), size, resampling))?;
            let projected = project(&sample, spec, opts)?;
            exact_w2_small(&projected.rows, &reference)
        })
        .collect::<Result<_>>()?;
    Ok(sizes
        .iter()
        .zip(distances.chunks(seeds.len()))
        .map(|(&size, d)| ConsistencyPoint {
            size,
            distances: d.to_vec(),
            median: median(d),
        })
        .collect())
}
