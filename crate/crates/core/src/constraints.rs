//! Moment-constraint families and their transport maps.
//!
//! Every family defines `phi: R^d -> R^k`. For a multiplier `lambda` the map
//! `T_lambda(y)` is the minimizer of `H(x) = |x - y|^2 - lambda . phi(x)`,
//! which is unique whenever `lambda` lies in the family's
//! [`MultiplierDomain`] (there `H` is strongly convex).

use std::fmt;

use crate::error::{Error, Result};

/// Which moment is constrained. Indices refer to dataset columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `(x_j1, ..., x_jk)`
    Linear(Vec<usize>),
    /// `|x|^2`
    Norm,
    /// `(x_j1^2, ..., x_jk^2)`
    Quadratic(Vec<usize>),
    /// `(x_j, x_j^2)`
    LinearQuadratic(usize),
    /// `x_j0 * x_j1`
    CrossProduct(usize, usize),
    /// `(x_j0, x_j1, x_j0 * x_j1)`
    LinearCross(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// mean phi = t
    #[default]
    Equality,
    /// mean phi >= t, componentwise
    InequalityGe,
}

/// A family together with its target `t` and mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub family: Family,
    pub target: Vec<f64>,
    pub mode: Mode,
}

/// Open box of admissible multipliers, one `(lower, upper)` pair per component.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierDomain {
    pub bounds: Vec<(f64, f64)>,
}

impl MultiplierDomain {
    pub fn contains(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.bounds.len()
            && lambda
                .iter()
                .zip(&self.bounds)
                .all(|(&l, &(lo, hi))| l.is_finite() && l > lo && l < hi)
    }

    /// Closed box shrunk by `margin` from every finite bound.
    pub fn shrunk(&self, margin: f64) -> Vec<(f64, f64)> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (lo + margin, hi - margin))
            .collect()
    }
}

impl fmt::Display for MultiplierDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .bounds
            .iter()
            .map(|(lo, hi)| format!("({lo}, {hi})"))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

/// Outcome of [`Family::numeric_transport`].
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTransport {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl Family {
    /// Number of constraint components `k`.
    pub fn k(&self) -> usize {
        match self {
            Family::Linear(idx) | Family::Quadratic(idx) => idx.len(),
            Family::Norm | Family::CrossProduct(..) => 1,
            Family::LinearQuadratic(_) => 2,
            Family::LinearCross(..) => 3,
        }
    }

    /// Columns the family reads; empty for `Norm`, which reads all of them.
    pub fn indices(&self) -> Vec<usize> {
        match self {
            Family::Linear(idx) | Family::Quadratic(idx) => idx.clone(),
            Family::Norm => Vec::new(),
            Family::LinearQuadratic(j) => vec![*j],
            Family::CrossProduct(a, b) | Family::LinearCross(a, b) => vec![*a, *b],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Linear(_) => "linear",
            Family::Norm => "norm",
            Family::Quadratic(_) => "quadratic",
            Family::LinearQuadratic(_) => "linear-quadratic",
            Family::CrossProduct(..) => "cross",
            Family::LinearCross(..) => "linear-cross",
        }
    }

    /// True when [`crate::solver`] has an exact multiplier formula for the
    /// equality problem.
    pub fn has_closed_form_solution(&self) -> bool {
        !matches!(self, Family::CrossProduct(..) | Family::LinearCross(..))
    }

    /// Checks indices against a dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let idx = self.indices();
        if matches!(self, Family::Linear(_) | Family::Quadratic(_)) && idx.is_empty() {
            return Err(Error::InvalidConstraint(format!(
                "{} family needs at least one column",
                self.name()
            )));
        }
        for (a, &i) in idx.iter().enumerate() {
            if i >= d {
                return Err(Error::InvalidConstraint(format!(
                    "column index {i} out of range for dimension {d}"
                )));
            }
            if idx[..a].contains(&i) {
                return Err(Error::InvalidConstraint(format!("column index {i} repeated")));
            }
        }
        Ok(())
    }

    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k()];
        self.phi_into(x, &mut out);
        out
    }

    pub fn phi_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Family::Linear(idx) => {
                for (o, &j) in out.iter_mut().zip(idx) {
                    *o = x[j];
                }
            }
            Family::Norm => out[0] = x.iter().map(|v| v * v).sum(),
            Family::Quadratic(idx) => {
                for (o, &j) in out.iter_mut().zip(idx) {
                    *o = x[j] * x[j];
                }
            }
            Family::LinearQuadratic(j) => {
                out[0] = x[*j];
                out[1] = x[*j] * x[*j];
            }
            Family::CrossProduct(a, b) => out[0] = x[*a] * x[*b],
            Family::LinearCross(a, b) => {
                out[0] = x[*a];
                out[1] = x[*b];
                out[2] = x[*a] * x[*b];
            }
        }
    }

    /// Strict-convexity domain of `H` in `lambda`.
    pub fn multiplier_domain(&self) -> MultiplierDomain {
        const FREE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);
        const BELOW_ONE: (f64, f64) = (f64::NEG_INFINITY, 1.0);
        const CROSS: (f64, f64) = (-2.0, 2.0);
        let bounds = match self {
            Family::Linear(idx) => vec![FREE; idx.len()],
            Family::Norm => vec![BELOW_ONE],
            Family::Quadratic(idx) => vec![BELOW_ONE; idx.len()],
            Family::LinearQuadratic(_) => vec![FREE, BELOW_ONE],
            Family::CrossProduct(..) => vec![CROSS],
            Family::LinearCross(..) => vec![FREE, FREE, CROSS],
        };
        MultiplierDomain { bounds }
    }

    fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        let domain = self.multiplier_domain();
        if !domain.contains(lambda) {
            return Err(Error::OutsideDomain {
                lambda: lambda.to_vec(),
                domain: domain.to_string(),
            });
        }
        Ok(())
    }

    /// Closed-form minimizer of `|x - y|^2 - lambda . phi(x)`.
    pub fn transport_map(&self, lambda: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        let mut out = y.to_vec();
        self.transport_into(lambda, y, &mut out);
        Ok(out)
    }

    /// As [`Family::transport_map`] without the domain check; `out` must
    /// already hold a copy of `y`.
    pub(crate) fn transport_into(&self, lambda: &[f64], y: &[f64], out: &mut [f64]) {
        if lambda.iter().all(|&l| l == 0.0) {
            return;
        }
        match self {
            Family::Linear(idx) => {
                for (&l, &j) in lambda.iter().zip(idx) {
                    out[j] = y[j] + l / 2.0;
                }
            }
            Family::Norm => {
                let s = 1.0 - lambda[0];
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = v / s;
                }
            }
            Family::Quadratic(idx) => {
                for (&l, &j) in lambda.iter().zip(idx) {
                    out[j] = y[j] / (1.0 - l);
                }
            }
            Family::LinearQuadratic(j) => {
                out[*j] = (lambda[0] / 2.0 + y[*j]) / (1.0 - lambda[1]);
            }
            Family::CrossProduct(a, b) => {
                let l = lambda[0];
                let u = (2.0 * y[*b] + l * y[*a]) / (2.0 - l * l / 2.0);
                out[*a] = y[*a] + l / 2.0 * u;
                out[*b] = u;
            }
            Family::LinearCross(a, b) => {
                let (l1, l2, l3) = (lambda[0], lambda[1], lambda[2]);
                let shifted = y[*a] + l1 / 2.0;
                let u = (y[*b] + l2 / 2.0 + l3 / 2.0 * shifted) / (1.0 - l3 * l3 / 4.0);
                out[*a] = shifted + l3 / 2.0 * u;
                out[*b] = u;
            }
        }
    }

    /// `grad_x H(x) = 2 (x - y) - sum_i lambda_i grad phi_i(x)`.
    pub fn objective_gradient(&self, lambda: &[f64], y: &[f64], x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x.iter().zip(y).map(|(a, b)| 2.0 * (a - b)).collect();
        match self {
            Family::Linear(idx) => {
                for (&l, &j) in lambda.iter().zip(idx) {
                    g[j] -= l;
                }
            }
            Family::Norm => {
                for (gi, &xi) in g.iter_mut().zip(x) {
                    *gi -= 2.0 * lambda[0] * xi;
                }
            }
            Family::Quadratic(idx) => {
                for (&l, &j) in lambda.iter().zip(idx) {
                    g[j] -= 2.0 * l * x[j];
                }
            }
            Family::LinearQuadratic(j) => {
                g[*j] -= lambda[0] + 2.0 * lambda[1] * x[*j];
            }
            Family::CrossProduct(a, b) => {
                g[*a] -= lambda[0] * x[*b];
                g[*b] -= lambda[0] * x[*a];
            }
            Family::LinearCross(a, b) => {
                g[*a] -= lambda[0] + lambda[2] * x[*b];
                g[*b] -= lambda[1] + lambda[2] * x[*a];
            }
        }
        g
    }

    /// Spectral bound on the Hessian of any single `phi_i`.
    fn hessian_bound(&self) -> f64 {
        match self {
            Family::Linear(_) => 0.0,
            Family::Norm | Family::Quadratic(_) | Family::LinearQuadratic(_) => 2.0,
            Family::CrossProduct(..) | Family::LinearCross(..) => 1.0,
        }
    }

    /// Gradient descent on `H` with fixed step `1 / (2 + |lambda| L_phi)`,
    /// started at `y`, stopping once `|grad H| <= tol`.
    pub fn numeric_transport(
        &self,
        lambda: &[f64],
        y: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<NumericTransport> {
        let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        self.numeric_transport_with_step(
            lambda,
            y,
            1.0 / (2.0 + norm * self.hessian_bound()),
            tol,
            max_iter,
        )
    }

    pub fn numeric_transport_with_step(
        &self,
        lambda: &[f64],
        y: &[f64],
        step: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<NumericTransport> {
        self.check_lambda(lambda)?;
        let mut x = y.to_vec();
        for iterations in 0..=max_iter {
            let g = self.objective_gradient(lambda, y, &x);
            let gradient_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gradient_norm <= tol {
                return Ok(NumericTransport {
                    point: x,
                    iterations,
                    gradient_norm,
                });
            }
            if iterations == max_iter {
                return Err(Error::MaxIterations {
                    iterations,
                    residual: gradient_norm,
                });
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= step * gi;
            }
        }
        unreachable!()
    }
}

impl ConstraintSpec {
    pub fn new(family: Family, target: Vec<f64>, mode: Mode) -> Result<Self> {
        if target.len() != family.k() {
            return Err(Error::InvalidConstraint(format!(
                "{} family expects {} target values, got {}",
                family.name(),
                family.k(),
                target.len()
            )));
        }
        if target.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConstraint("non-finite target".into()));
        }
        // components holding squared quantities; under `>=` a non-positive
        // target is merely always met
        let squared: Vec<usize> = match family {
            _ if mode == Mode::InequalityGe => Vec::new(),
            Family::Norm | Family::Quadratic(_) => (0..target.len()).collect(),
            Family::LinearQuadratic(_) => vec![1],
            _ => Vec::new(),
        };
        if let Some(&i) = squared.iter().find(|&&i| target[i] <= 0.0) {
            return Err(Error::InvalidConstraint(format!(
                "target {} for a squared quantity must be positive",
                target[i]
            )));
        }
        Ok(Self { family, target, mode })
    }

    pub fn k(&self) -> usize {
        self.family.k()
    }

    pub fn phi(&self, x: &[f64]) -> Vec<f64> {
        self.family.phi(x)
    }

    pub fn multiplier_domain(&self) -> MultiplierDomain {
        self.family.multiplier_domain()
    }

    pub fn transport_map(&self, lambda: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.family.transport_map(lambda, y)
    }

    /// Same family and mode, different target.
    pub fn with_target(&self, target: Vec<f64>) -> Result<Self> {
        Self::new(self.family.clone(), target, self.mode)
    }
}
