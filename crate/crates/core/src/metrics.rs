//! Response and fairness measures evaluated on projected datasets.
//!
//! Only decision-level quantities are computed here. Projected rows carry
//! no ground truth, so there is deliberately no accuracy or error metric.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::models::{ModelHandle, PredictionBatch, Task};
use crate::projection::ProjectedDataset;
use crate::stress::StressSweep;

/// Portion of predicted ones.
pub fn pp1(preds: &PredictionBatch) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::InvalidArgument("empty prediction batch".into()));
    }
    Ok(preds.values.iter().sum::<f64>() / preds.len() as f64)
}

/// Mean and population variance of the predictions.
pub fn reg_mean_var(preds: &PredictionBatch) -> Result<(f64, f64)> {
    if preds.is_empty() {
        return Err(Error::InvalidArgument("empty prediction batch".into()));
    }
    let n = preds.len() as f64;
    let mean = preds.values.iter().sum::<f64>() / n;
    let var = preds.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var))
}

/// Group sizes and positive-decision counts; group 0 is the protected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupCounts {
    pub n0: usize,
    pub k0: usize,
    pub n1: usize,
    pub k1: usize,
}

impl GroupCounts {
    pub fn from_predictions(preds: &PredictionBatch, sensitive: &[f64]) -> Result<Self> {
        if preds.len() != sensitive.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictions for {} group labels",
                preds.len(),
                sensitive.len()
            )));
        }
        let mut c = GroupCounts {
            n0: 0,
            k0: 0,
            n1: 0,
            k1: 0,
        };
        for (&p, &s) in preds.values.iter().zip(sensitive) {
            let positive = (p == 1.0) as usize;
            match s {
                0.0 => {
                    c.n0 += 1;
                    c.k0 += positive;
                }
                1.0 => {
                    c.n1 += 1;
                    c.k1 += positive;
                }
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "sensitive attribute must be 0 or 1, got {other}"
                    )))
                }
            }
        }
        Ok(c)
    }

    pub fn swapped(self) -> Self {
        GroupCounts {
            n0: self.n1,
            k0: self.k1,
            n1: self.n0,
            k1: self.k0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparateImpact {
    pub di: f64,
    pub lo: f64,
    pub hi: f64,
}

/// `(k0/n0) / (k1/n1)` with a log-scale delta-method interval.
///
/// When the protected group has no positives the estimate is 0 and the
/// upper bound uses the exact binomial bound `1 - ((1 - c) / 2)^(1/n0)` on
/// its rate.
pub fn disparate_impact(counts: GroupCounts, confidence: f64) -> Result<DisparateImpact> {
    let GroupCounts { n0, k0, n1, k1 } = counts;
    if n0 == 0 || n1 == 0 || k0 > n0 || k1 > n1 {
        return Err(Error::InvalidArgument(format!("invalid group counts {counts:?}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    if k1 == 0 {
        return Err(Error::DisparateImpactUndefined);
    }
    let p0 = k0 as f64 / n0 as f64;
    let p1 = k1 as f64 / n1 as f64;
    if k0 == 0 {
        let upper_rate = 1.0 - ((1.0 - confidence) / 2.0).powf(1.0 / n0 as f64);
        return Ok(DisparateImpact {
            di: 0.0,
            lo: 0.0,
            hi: upper_rate / p1,
        });
    }
    let di = p0 / p1;
    let z = Normal::standard().inverse_cdf((1.0 + confidence) / 2.0);
    let se = ((1.0 - p0) / (n0 as f64 * p0) + (1.0 - p1) / (n1 as f64 * p1)).sqrt();
    let log_di = di.ln();
    Ok(DisparateImpact {
        di,
        lo: (log_di - z * se).exp(),
        hi: (log_di + z * se).exp(),
    })
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricKind {
    Pp1,
    MeanVar,
    /// Disparate impact with respect to a binary column of the projected data.
    DisparateImpact {
        sensitive: String,
    },
}

/// One curve: a metric of one model across stress levels.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub metric_name: String,
    pub model_name: String,
    pub taus: Vec<f64>,
    /// `NaN` where the cell failed; see `failures`.
    pub values: Vec<f64>,
    pub lower_ci: Option<Vec<f64>>,
    pub upper_ci: Option<Vec<f64>>,
    /// `(index, message)` for every failed cell.
    pub failures: Vec<(usize, String)>,
}

impl MetricSeries {
    fn new(metric: &str, model: &str, taus: &[f64], with_ci: bool) -> Self {
        let n = taus.len();
        Self {
            metric_name: metric.into(),
            model_name: model.into(),
            taus: taus.to_vec(),
            values: vec![f64::NAN; n],
            lower_ci: with_ci.then(|| vec![f64::NAN; n]),
            upper_ci: with_ci.then(|| vec![f64::NAN; n]),
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, i: usize, msg: String) {
        self.failures.push((i, msg));
    }
}

/// Evaluates every model on every projected dataset of a sweep.
///
/// Emits one series per model for `Pp1` and `DisparateImpact`, and two
/// (`mean`, `variance`) for `MeanVar`. Failed cells are recorded and the
/// series continues.
pub fn series_over_sweep(
    models: &[ModelHandle],
    sweep: &StressSweep,
    outputs: &[Result<ProjectedDataset<'_>>],
    metric: &MetricKind,
    confidence: f64,
) -> Result<Vec<MetricSeries>> {
    if outputs.len() != sweep.taus.len() {
        return Err(Error::InvalidArgument(format!(
            "{} projections for {} stress levels",
            outputs.len(),
            sweep.taus.len()
        )));
    }
    let sensitive_index = match metric {
        MetricKind::DisparateImpact { sensitive } => {
            let source = outputs
                .iter()
                .find_map(|o| o.as_ref().ok())
                .ok_or_else(|| Error::InvalidArgument("every projection failed".into()))?
                .source;
            let j = source.column_index(sensitive)?;
            if j == sweep.column {
                return Err(Error::InvalidArgument(format!(
                    "sensitive column `{sensitive}` is the stressed column"
                )));
            }
            Some(j)
        }
        _ => None,
    };

    let mut all = Vec::new();
    for model in models {
        let name = &model.name;
        match metric {
            MetricKind::Pp1 => {
                let mut s = MetricSeries::new("pp1", name, &sweep.taus, false);
                for (i, out) in outputs.iter().enumerate() {
                    let cell = out.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                        require_task(model, Task::Classification)
                            .and_then(|_| model.predict(&p.rows).and_then(|b| pp1(&b)))
                            .map_err(|e| e.to_string())
                    });
                    match cell {
                        Ok(v) => s.values[i] = v,
                        Err(e) => s.fail(i, e),
                    }
                }
                all.push(s);
            }
            MetricKind::MeanVar => {
                let mut m = MetricSeries::new("mean", name, &sweep.taus, false);
                let mut v = MetricSeries::new("variance", name, &sweep.taus, false);
                for (i, out) in outputs.iter().enumerate() {
                    let cell = out.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                        model
                            .predict(&p.rows)
                            .and_then(|b| reg_mean_var(&b))
                            .map_err(|e| e.to_string())
                    });
                    match cell {
                        Ok((mean, var)) => {
                            m.values[i] = mean;
                            v.values[i] = var;
                        }
                        Err(e) => {
                            m.fail(i, e.clone());
                            v.fail(i, e);
                        }
                    }
                }
                all.push(m);
                all.push(v);
            }
            MetricKind::DisparateImpact { .. } => {
                let j = sensitive_index.expect("resolved above");
                let mut s = MetricSeries::new("di", name, &sweep.taus, true);
                for (i, out) in outputs.iter().enumerate() {
                    let cell = out.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                        require_task(model, Task::Classification)
                            .and_then(|_| model.predict(&p.rows))
                            .and_then(|b| GroupCounts::from_predictions(&b, &p.rows.column(j)?))
                            .and_then(|c| disparate_impact(c, confidence))
                            .map_err(|e| e.to_string())
                    });
                    match cell {
                        Ok(d) => {
                            s.values[i] = d.di;
                            s.lower_ci.as_mut().expect("ci")[i] = d.lo;
                            s.upper_ci.as_mut().expect("ci")[i] = d.hi;
                        }
                        Err(e) => s.fail(i, e),
                    }
                }
                all.push(s);
            }
        }
    }
    Ok(all)
}

fn require_task(model: &ModelHandle, task: Task) -> Result<()> {
    if model.task != task {
        return Err(Error::Model(format!(
            "model `{}` is not a {task} model",
            model.name
        )));
    }
    Ok(())
}
