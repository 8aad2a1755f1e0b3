//! Lagrange multipliers for the projection problem.
//!
//! The projected measure is `T_lambda # Q_n` where `lambda` makes the
//! transported sample hit the target: `t = mean_i phi(T_lambda(Z_i))`.
//! Linear, norm, quadratic and linear-quadratic families have exact
//! multiplier formulas; the cross-product families are solved by projected
//! gradient ascent on the concave dual
//!
//! ```text
//! g(lambda) = lambda . t + mean_i [ |T_lambda(Z_i) - Z_i|^2 - lambda . phi(T_lambda(Z_i)) ]
//! ```
//!
//! whose gradient is exactly the residual `t - mean_i phi(T_lambda(Z_i))`.

use crate::constraints::{ConstraintSpec, Family, Mode};
use crate::dataset::EmpiricalDataset;
use crate::error::{Error, Result};

/// Margin kept from finite convexity bounds during dual ascent.
pub const DOMAIN_MARGIN: f64 = 1e-6;

/// Consecutive pinned, non-improving iterations before giving up.
const PINNED_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    DualAscent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub lambda: Vec<f64>,
    /// `t - mean phi(T_lambda(Z))` at `lambda`.
    pub residual: Vec<f64>,
    pub iterations: usize,
    pub method: Method,
}

impl Multiplier {
    pub fn residual_norm(&self) -> f64 {
        inf_norm(&self.residual)
    }
}

/// Primal and dual objective values at a solved multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCertificate {
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance accepted from the exact formulas, scaled by
    /// `max(1, |t|_inf)` to absorb rounding on large-valued columns.
    pub closed_form_tol: f64,
    /// Absolute residual tolerance for dual ascent.
    pub ascent_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            closed_form_tol: 1e-8,
            ascent_tol: 1e-5,
            max_iter: 10_000,
        }
    }
}

impl SolverOptions {
    /// One tolerance for both paths.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            closed_form_tol: tol,
            ascent_tol: tol,
            ..Self::default()
        }
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_spec(ds: &EmpiricalDataset, spec: &ConstraintSpec) -> Result<()> {
    spec.family.validate(ds.d())
}

/// `mean_i phi(T_lambda(Z_i))` and `mean_i |T_lambda(Z_i) - Z_i|^2`.
/// `lambda` must already be inside the domain.
fn transported_moments(ds: &EmpiricalDataset, family: &Family, lambda: &[f64]) -> (Vec<f64>, f64) {
    let k = family.k();
    let mut sum_phi = vec![0.0; k];
    let mut phi = vec![0.0; k];
    let mut cost = 0.0;
    let mut x = vec![0.0; ds.d()];
    for y in ds.rows() {
        x.copy_from_slice(y);
        family.transport_into(lambda, y, &mut x);
        family.phi_into(&x, &mut phi);
        for (s, p) in sum_phi.iter_mut().zip(&phi) {
            *s += p;
        }
        cost += x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let n = ds.n() as f64;
    sum_phi.iter_mut().for_each(|s| *s /= n);
    (sum_phi, cost / n)
}

/// `mean_i phi(Z_i)` of the untransported sample.
pub fn sample_moment(ds: &EmpiricalDataset, family: &Family) -> Vec<f64> {
    transported_moments(ds, family, &vec![0.0; family.k()]).0
}

/// `t - mean_i phi(T_lambda(Z_i))`.
pub fn residual(ds: &EmpiricalDataset, spec: &ConstraintSpec, lambda: &[f64]) -> Result<Vec<f64>> {
    check_spec(ds, spec)?;
    check_domain(spec, lambda)?;
    let (mean_phi, _) = transported_moments(ds, &spec.family, lambda);
    Ok(spec.target.iter().zip(&mean_phi).map(|(t, m)| t - m).collect())
}

fn check_domain(spec: &ConstraintSpec, lambda: &[f64]) -> Result<()> {
    let domain = spec.multiplier_domain();
    if !domain.contains(lambda) {
        return Err(Error::OutsideDomain {
            lambda: lambda.to_vec(),
            domain: domain.to_string(),
        });
    }
    Ok(())
}

fn dual_value(t: &[f64], mean_phi: &[f64], cost: f64, lambda: &[f64]) -> f64 {
    // lambda . t + mean(|T - Z|^2) - lambda . mean(phi(T))
    let lin: f64 = lambda
        .iter()
        .zip(t.iter().zip(mean_phi))
        .map(|(l, (t, m))| l * (t - m))
        .sum();
    cost + lin
}

/// Dual objective `lambda . t + mean_i inf_x { |x - Z_i|^2 - lambda . phi(x) }`.
pub fn dual_objective(ds: &EmpiricalDataset, spec: &ConstraintSpec, lambda: &[f64]) -> Result<f64> {
    check_spec(ds, spec)?;
    check_domain(spec, lambda)?;
    let (mean_phi, cost) = transported_moments(ds, &spec.family, lambda);
    Ok(dual_value(&spec.target, &mean_phi, cost, lambda))
}

/// Primal cost, dual value and their gap at `multiplier`.
pub fn certify(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    multiplier: &Multiplier,
) -> Result<DualCertificate> {
    check_spec(ds, spec)?;
    check_domain(spec, &multiplier.lambda)?;
    let (mean_phi, cost) = transported_moments(ds, &spec.family, &multiplier.lambda);
    let dual = dual_value(&spec.target, &mean_phi, cost, &multiplier.lambda);
    Ok(DualCertificate {
        primal_value: cost,
        dual_value: dual,
        gap: cost - dual,
    })
}

/// Solves according to `spec.mode`.
pub fn solve(ds: &EmpiricalDataset, spec: &ConstraintSpec, opts: &SolverOptions) -> Result<Multiplier> {
    match spec.mode {
        Mode::Equality => solve_equality(ds, spec, opts),
        Mode::InequalityGe => solve_inequality(ds, spec, opts),
    }
}

/// Multiplier with `mean phi(T_lambda(Z)) = t`.
pub fn solve_equality(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    opts: &SolverOptions,
) -> Result<Multiplier> {
    check_spec(ds, spec)?;
    if spec.family.has_closed_form_solution() {
        let lambda = closed_form_equality(ds, &spec.family, &spec.target)?;
        accept_closed_form(ds, spec, lambda, opts, Mode::Equality)
    } else {
        dual_ascent_from(ds, spec, Mode::Equality, vec![0.0; spec.k()], opts)
    }
}

/// Multiplier `lambda >= 0` with `mean phi(T_lambda(Z)) >= t` and
/// complementary slackness.
pub fn solve_inequality(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    opts: &SolverOptions,
) -> Result<Multiplier> {
    check_spec(ds, spec)?;
    let k = spec.k();
    let base = sample_moment(ds, &spec.family);
    let slack: Vec<f64> = spec.target.iter().zip(&base).map(|(t, m)| t - m).collect();
    if slack.iter().all(|&r| r <= 0.0) {
        return Ok(Multiplier {
            lambda: vec![0.0; k],
            residual: slack,
            iterations: 0,
            method: Method::ClosedForm,
        });
    }
    if spec.family.has_closed_form_solution() {
        if let Some(lambda) = closed_form_inequality(ds, spec, &base, opts)? {
            return accept_closed_form(ds, spec, lambda, opts, Mode::InequalityGe);
        }
    }
    dual_ascent_from(ds, spec, Mode::InequalityGe, vec![0.0; k], opts)
}

/// Projected dual ascent regardless of whether an exact formula exists.
pub fn dual_ascent(ds: &EmpiricalDataset, spec: &ConstraintSpec, opts: &SolverOptions) -> Result<Multiplier> {
    check_spec(ds, spec)?;
    dual_ascent_from(ds, spec, spec.mode, vec![0.0; spec.k()], opts)
}

fn accept_closed_form(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    lambda: Vec<f64>,
    opts: &SolverOptions,
    mode: Mode,
) -> Result<Multiplier> {
    check_domain(spec, &lambda)?;
    let res = residual(ds, spec, &lambda)?;
    let scale = inf_norm(&spec.target).max(1.0);
    let ok = match mode {
        Mode::Equality => inf_norm(&res) <= opts.closed_form_tol * scale,
        // inactive components may be strictly feasible
        Mode::InequalityGe => res.iter().zip(&lambda).all(|(&r, &l)| {
            r <= opts.closed_form_tol * scale && (l == 0.0 || r.abs() <= opts.closed_form_tol * scale)
        }),
    };
    if ok {
        Ok(Multiplier {
            lambda,
            residual: res,
            iterations: 0,
            method: Method::ClosedForm,
        })
    } else {
        // rounding on badly scaled data: polish from the formula's answer
        dual_ascent_from(ds, spec, mode, lambda, opts)
    }
}

fn closed_form_equality(ds: &EmpiricalDataset, family: &Family, t: &[f64]) -> Result<Vec<f64>> {
    let n = ds.n() as f64;
    match family {
        Family::Linear(idx) => idx
            .iter()
            .zip(t)
            .map(|(&j, &tj)| Ok(2.0 * (tj - ds.column_mean(j)?)))
            .collect(),
        Family::Norm => {
            let s = ds
                .rows()
                .map(|r| r.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                / n;
            Ok(vec![scale_multiplier(s, t[0])?])
        }
        Family::Quadratic(idx) => idx
            .iter()
            .zip(t)
            .map(|(&j, &tj)| scale_multiplier(ds.column_second_moment(j)?, tj))
            .collect(),
        Family::LinearQuadratic(j) => {
            let m = ds.column_mean(*j)?;
            let s = ds.column_second_moment(*j)?;
            let (t1, t2) = (t[0], t[1]);
            let var = s - m * m;
            let target_var = t2 - t1 * t1;
            if var <= 0.0 {
                return Err(Error::NotAttainable(format!(
                    "column {j} has zero variance; its spread cannot be changed by an affine map"
                )));
            }
            if target_var <= 0.0 {
                return Err(Error::NotAttainable(format!(
                    "second moment {t2} does not exceed squared mean {t1}^2"
                )));
            }
            let a = (target_var / var).sqrt();
            Ok(vec![2.0 * (t1 - a * m) / a, 1.0 - 1.0 / a])
        }
        Family::CrossProduct(..) | Family::LinearCross(..) => {
            unreachable!("no closed form for {}", family.name())
        }
    }
}

/// `lambda = 1 - sqrt(s / t)`: scaling a sample with second moment `s` by
/// `1 / (1 - lambda)` gives second moment `t`.
fn scale_multiplier(s: f64, t: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::NotAttainable(format!(
            "second moment is zero; no scaling reaches {t}"
        )));
    }
    if t <= 0.0 {
        return Err(Error::NotAttainable(format!(
            "target {t} for a squared quantity must be positive"
        )));
    }
    Ok(1.0 - (s / t).sqrt())
}

/// Exact inequality solution for the closed-form families, or `None` when
/// no active set yields a KKT point.
fn closed_form_inequality(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    base: &[f64],
    opts: &SolverOptions,
) -> Result<Option<Vec<f64>>> {
    let t = &spec.target;
    match &spec.family {
        // separable: each component is its own one-dimensional problem
        Family::Linear(idx) | Family::Quadratic(idx) => {
            let mut lambda = Vec::with_capacity(idx.len());
            for (i, &j) in idx.iter().enumerate() {
                if t[i] <= base[i] {
                    lambda.push(0.0);
                } else {
                    let single = match &spec.family {
                        Family::Linear(_) => Family::Linear(vec![j]),
                        _ => Family::Quadratic(vec![j]),
                    };
                    lambda.push(closed_form_equality(ds, &single, &t[i..=i])?[0]);
                }
            }
            Ok(Some(lambda))
        }
        Family::Norm => Ok(Some(closed_form_equality(ds, &spec.family, t)?)),
        Family::LinearQuadratic(j) => {
            let tol = opts.closed_form_tol * inf_norm(t).max(1.0);
            let m = ds.column_mean(*j)?;
            let s = ds.column_second_moment(*j)?;
            let candidates = [
                // only the mean constraint binds
                Ok(vec![2.0 * (t[0] - m), 0.0]),
                // only the second-moment constraint binds
                scale_multiplier(s, t[1]).map(|l| vec![0.0, l]),
                // both bind
                closed_form_equality(ds, &spec.family, t),
            ];
            for lambda in candidates.into_iter().flatten() {
                if lambda.iter().any(|&l| l < 0.0) || !spec.multiplier_domain().contains(&lambda) {
                    continue;
                }
                let res = residual(ds, spec, &lambda)?;
                if res.iter().all(|&r| r <= tol) {
                    return Ok(Some(lambda));
                }
            }
            Ok(None)
        }
        Family::CrossProduct(..) | Family::LinearCross(..) => Ok(None),
    }
}

/// Box used by projected ascent: the convexity domain shrunk by
/// [`DOMAIN_MARGIN`], intersected with `lambda >= 0` for inequalities.
fn ascent_box(spec: &ConstraintSpec, mode: Mode) -> Vec<(f64, f64)> {
    spec.multiplier_domain()
        .shrunk(DOMAIN_MARGIN)
        .into_iter()
        .map(|(lo, hi)| match mode {
            Mode::Equality => (lo, hi),
            Mode::InequalityGe => (lo.max(0.0), hi),
        })
        .collect()
}

fn project_box(lambda: &mut [f64], bounds: &[(f64, f64)]) {
    for (l, &(lo, hi)) in lambda.iter_mut().zip(bounds) {
        *l = l.clamp(lo, hi);
    }
}

/// The residual with components resting on `lambda = 0` with slack zeroed:
/// those are KKT-stationary under `InequalityGe`.
fn stationarity(res: &[f64], lambda: &[f64], bounds: &[(f64, f64)], mode: Mode) -> Vec<f64> {
    res.iter()
        .zip(lambda)
        .zip(bounds)
        .map(|((&r, &l), &(lo, _))| {
            if mode == Mode::InequalityGe && l == lo && lo == 0.0 && r <= 0.0 {
                0.0
            } else {
                r
            }
        })
        .collect()
}

/// Solves the `k x k` row-major system `a x = b` by Gaussian elimination
/// with partial pivoting. `None` when numerically singular.
fn solve_small(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i * k + c].abs().total_cmp(&a[j * k + c].abs()))?;
        if a[p * k + c].abs() <= 1e-13 * scale {
            return None;
        }
        if p != c {
            for j in 0..k {
                a.swap(p * k + j, c * k + j);
            }
            b.swap(p, c);
        }
        for i in c + 1..k {
            let f = a[i * k + c] / a[c * k + c];
            for j in c..k {
                a[i * k + j] -= f * a[c * k + j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; k];
    for c in (0..k).rev() {
        let s: f64 = (c + 1..k).map(|j| a[c * k + j] * x[j]).sum();
        x[c] = (b[c] - s) / a[c * k + c];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// One damped Newton step on the stationarity equation `residual = 0`, with a
/// forward-difference Jacobian of the transported moments. Returns the new
/// iterate when it lowers the residual without losing dual value; `None`
/// leaves the iteration to the gradient step.
#[allow(clippy::too_many_arguments)]
fn newton_step(
    ds: &EmpiricalDataset,
    family: &Family,
    t: &[f64],
    lambda: &[f64],
    mean_phi: &[f64],
    res: &[f64],
    value: f64,
    norm: f64,
    bounds: &[(f64, f64)],
    mode: Mode,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    // components held at a zero bound with slack stay put
    let free: Vec<usize> = (0..lambda.len())
        .filter(|&c| !(mode == Mode::InequalityGe && lambda[c] == 0.0 && bounds[c].0 == 0.0 && res[c] <= 0.0))
        .collect();
    let k = free.len();
    if k == 0 {
        return None;
    }
    let mut jac = vec![0.0; k * k];
    for (col, &c) in free.iter().enumerate() {
        let (lo, hi) = bounds[c];
        let mut h = 1e-7 * lambda[c].abs().max(1.0);
        if lambda[c] + h > hi {
            h = -h;
            if lambda[c] + h < lo {
                return None;
            }
        }
        let mut shifted = lambda.to_vec();
        shifted[c] += h;
        let (phi_h, _) = transported_moments(ds, family, &shifted);
        for (row, &r) in free.iter().enumerate() {
            jac[row * k + col] = (phi_h[r] - mean_phi[r]) / h;
        }
    }
    let step = solve_small(jac, free.iter().map(|&r| res[r]).collect())?;
    let mut direction = vec![0.0; lambda.len()];
    for (&c, d) in free.iter().zip(step) {
        direction[c] = d;
    }
    let slack = 1e-12 * value.abs().max(1.0);
    let mut s = 1.0;
    for _ in 0..12 {
        let mut trial: Vec<f64> = lambda.iter().zip(&direction).map(|(l, d)| l + s * d).collect();
        project_box(&mut trial, bounds);
        let (trial_phi, trial_cost) = transported_moments(ds, family, &trial);
        let trial_value = dual_value(t, &trial_phi, trial_cost, &trial);
        let trial_res: Vec<f64> = t.iter().zip(&trial_phi).map(|(t, m)| t - m).collect();
        let trial_norm = inf_norm(&stationarity(&trial_res, &trial, bounds, mode));
        if trial_norm < norm && trial_value >= value - slack {
            return Some((trial, trial_phi, trial_value));
        }
        s /= 2.0;
    }
    None
}

fn dual_ascent_from(
    ds: &EmpiricalDataset,
    spec: &ConstraintSpec,
    mode: Mode,
    start: Vec<f64>,
    opts: &SolverOptions,
) -> Result<Multiplier> {
    let family = &spec.family;
    let t = &spec.target;
    let bounds = ascent_box(spec, mode);
    let domain = spec.multiplier_domain();

    let mut lambda = start;
    project_box(&mut lambda, &bounds);
    let (mut mean_phi, cost) = transported_moments(ds, family, &lambda);
    let mut value = dual_value(t, &mean_phi, cost, &lambda);

    let mut pinned_run = 0usize;
    let mut prev_norm = f64::INFINITY;
    let mut step: f64 = 1.0;

    for iteration in 0..=opts.max_iter {
        let res: Vec<f64> = t.iter().zip(&mean_phi).map(|(t, m)| t - m).collect();
        let norm = inf_norm(&stationarity(&res, &lambda, &bounds, mode));
        if norm <= opts.ascent_tol {
            return Ok(Multiplier {
                lambda,
                residual: res,
                iterations: iteration,
                method: Method::DualAscent,
            });
        }
        let pinned = lambda
            .iter()
            .zip(&bounds)
            .zip(&domain.bounds)
            .any(|((&l, &(lo, hi)), &(dlo, dhi))| {
                (dlo.is_finite() && l == lo) || (dhi.is_finite() && l == hi)
            });
        if pinned && norm >= prev_norm {
            pinned_run += 1;
            if pinned_run >= PINNED_LIMIT {
                return Err(Error::DomainHit { residual: norm });
            }
        } else {
            pinned_run = 0;
        }
        prev_norm = norm;
        if iteration == opts.max_iter {
            return Err(Error::MaxIterations {
                iterations: iteration,
                residual: norm,
            });
        }

        if let Some((trial, trial_phi, trial_value)) = newton_step(
            ds, family, t, &lambda, &mean_phi, &res, value, norm, &bounds, mode,
        ) {
            lambda = trial;
            mean_phi = trial_phi;
            value = trial_value;
            continue;
        }

        // backtracking: halve from the previous step's double until the
        // quadratic upper model of the concave dual is respected
        step = (step * 2.0).min(1.0);
        loop {
            let mut trial: Vec<f64> = lambda.iter().zip(&res).map(|(l, r)| l + step * r).collect();
            project_box(&mut trial, &bounds);
            let (trial_phi, trial_cost) = transported_moments(ds, family, &trial);
            let trial_value = dual_value(t, &trial_phi, trial_cost, &trial);
            let moved: Vec<f64> = trial.iter().zip(&lambda).map(|(a, b)| a - b).collect();
            let lin: f64 = moved.iter().zip(&res).map(|(d, r)| d * r).sum();
            let sq: f64 = moved.iter().map(|d| d * d).sum();
            let accept = trial_value >= value + lin - sq / (2.0 * step) - 1e-15 * value.abs().max(1.0);
            if accept || step < 1e-30 {
                lambda = trial;
                mean_phi = trial_phi;
                value = trial_value;
                break;
            }
            step /= 2.0;
        }
    }
    unreachable!("the final iteration always returns")
}
