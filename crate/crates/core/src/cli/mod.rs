//! Command-line front end: `project`, `sweep`, `di`, `check` and `serve`.

mod config;
mod svg;

pub use config::{parse_mode, ConfigFile, ExperimentConfig, ModelSpec};
pub use svg::{emit_svg, render_svg};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{ConstraintSpec, Family, Mode};
use crate::dataset::{load_csv, EmpiricalDataset};
use crate::error::{Error, Result};
use crate::metrics::{self, series_over_sweep, MetricKind, MetricSeries};
use crate::models::{self, Direction, ExternalModel, ModelHandle, Task, TreeParams};
use crate::projection::{consistency_curve, optimality_check, project, Resampling};
use crate::solver::{self, Method, SolverOptions};
use crate::stress::{make_sweep, run_sweep, stress_target};

/// Exit status when a `check` verification fails.
pub const EXIT_CHECK_FAILED: u8 = 2;
/// Exit status when a sweep finished but some cells failed.
pub const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "wasserstress",
    version,
    about = "Stress-test tabular predictors with Wasserstein projections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a dataset onto one moment constraint and write it as CSV.
    Project(ProjectArgs),
    /// Train models, sweep stressed features, report model response.
    Sweep(ExperimentArgs),
    /// Train models, sweep stressed features, report disparate impact.
    Di(ExperimentArgs),
    /// Verify feasibility, duality, optimality and consistency of one projection.
    Check(CheckArgs),
    /// Serve a built-in model over the line protocol on stdin/stdout.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Numeric columns to load (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    #[arg(long)]
    pub target: Option<String>,
    /// `cls` or `reg`.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub sensitive: Option<String>,
    /// builtin:tree[:depth] | builtin:nb | builtin:threshold:<col>:<c> |
    /// builtin:constant:<v> | external:<command>. Repeatable.
    #[arg(long = "model")]
    pub models: Vec<String>,
    /// Column to stress. Repeatable.
    #[arg(long = "feature")]
    pub features: Vec<String>,
    /// Number of stress levels (odd).
    #[arg(long)]
    pub taus: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `eq` or `ge`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ExperimentArgs {
    /// Merges flags over the config file and validates.
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let non_empty = |v: Vec<String>| (!v.is_empty()).then_some(v);
        let flags = ConfigFile {
            data: self.data,
            columns: self.columns,
            target: self.target,
            task: self.task,
            sensitive: self.sensitive,
            models: non_empty(self.models),
            features: non_empty(self.features),
            taus: self.taus,
            alpha: self.alpha,
            mode: self.mode,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            train_fraction: self.train_fraction,
            confidence: self.confidence,
            out: self.out,
        };
        ExperimentConfig::from_file(flags.or(file))
    }
}

/// The constraint shared by `project` and `check`.
#[derive(Debug, Args)]
pub struct ConstraintArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// linear | norm | quadratic | linear-quadratic | cross | linear-cross
    #[arg(long, default_value = "linear")]
    pub family: String,
    /// Columns the constraint acts on.
    #[arg(long = "on", value_delimiter = ',')]
    pub on: Vec<String>,
    /// Target moments, one per constraint component.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub value: Option<Vec<f64>>,
    /// Stress this column's mean instead of giving `--value`.
    #[arg(long)]
    pub feature: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = crate::stress::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value = "eq")]
    pub mode: String,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Jitter-recalibrated competitors in the optimality check.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Larger datasets are subsampled to this many rows for exact transport.
    #[arg(long, default_value_t = 256)]
    pub max_rows: usize,
    /// Seeds per subsample size in the consistency check; 0 skips it.
    #[arg(long, default_value_t = 10)]
    pub consistency_seeds: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// builtin:tree[:depth] | builtin:nb | builtin:threshold:<col>:<c> | builtin:constant:<v>
    #[arg(long)]
    pub model: String,
    /// `cls` or `reg`.
    #[arg(long, default_value = "cls")]
    pub task: String,
    /// Training data, required for fitted models.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    /// Feature names when no training data is given.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `std::env::args` and runs the chosen subcommand.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run_command(command: Command) -> Result<u8> {
    match command {
        Command::Project(args) => run_project(args),
        Command::Sweep(args) => report_run(&args.resolve()?, Report::Response),
        Command::Di(args) => report_run(&args.resolve()?, Report::DisparateImpact),
        Command::Check(args) => run_check(args),
        Command::Serve(args) => run_serve(args),
    }
}

fn report_run(config: &ExperimentConfig, report: Report) -> Result<u8> {
    let summary = run(config, report)?;
    for f in &summary.failures {
        eprintln!(
            "failed cell: feature={} tau={} model={}: {}",
            f.feature, f.tau, f.model, f.message
        );
    }
    for p in &summary.files {
        println!("{}", p.display());
    }
    Ok(if summary.failures.is_empty() {
        0
    } else {
        EXIT_PARTIAL
    })
}

/// Which metrics a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    /// PP1 for classifiers, mean and variance for regressors.
    Response,
    DisparateImpact,
}

/// A metric cell that could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub feature: String,
    pub tau: f64,
    pub model: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
    pub failures: Vec<CellFailure>,
}

/// Builds one model per spec from the training split.
pub fn build_models(config: &ExperimentConfig, train: &EmpiricalDataset) -> Result<Vec<ModelHandle>> {
    let names: Vec<String> = train.without_column(&config.target)?.column_names().to_vec();
    config
        .models
        .iter()
        .map(|(label, spec)| {
            let model = match spec {
                ModelSpec::Tree { max_depth } => {
                    let params = TreeParams {
                        max_depth: *max_depth,
                        seed: config.seed,
                        ..TreeParams::default()
                    };
                    models::fit_tree(train, &config.target, config.task, params)
                }
                ModelSpec::NaiveBayes => models::fit_naive_bayes(train, &config.target),
                ModelSpec::Threshold { column, cutoff } => {
                    let j = names
                        .iter()
                        .position(|n| n == column)
                        .ok_or_else(|| Error::UnknownColumn(column.clone()))?;
                    models::threshold_model(&names, j, *cutoff, Direction::Ge)
                }
                ModelSpec::Constant { value } => Ok(models::constant_model(&names, config.task, *value)),
                ModelSpec::External { command } => ExternalModel::spawn(command, config.task, &names),
            };
            model
                .map(|m| m.with_name(label.clone()))
                .map_err(|e| Error::Model(format!("model `{label}`: {e}")))
        })
        .collect()
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

/// The `model,feature,tau,metric,value,lo,hi` table for one metric.
pub fn metric_table(feature: &str, series: &[&MetricSeries]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "feature", "tau", "metric", "value", "lo", "hi"])?;
    for s in series {
        for (i, &tau) in s.taus.iter().enumerate() {
            let bound = |b: &Option<Vec<f64>>| b.as_ref().map(|b| csv_number(b[i])).unwrap_or_default();
            w.write_record([
                s.model_name.clone(),
                feature.to_string(),
                tau.to_string(),
                s.metric_name.clone(),
                csv_number(s.values[i]),
                bound(&s.lower_ci),
                bound(&s.upper_ci),
            ])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io {
        path: PathBuf::from("<memory>"),
        source: e.into_error(),
    })
}

fn write_file(path: &Path, bytes: &[u8], summary: &mut RunSummary) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    summary.files.push(path.to_path_buf());
    Ok(())
}

/// Runs the full protocol: load, validate, split, train on the train part,
/// sweep every stressed feature on the test part, evaluate, write reports.
///
/// Per feature `f` it writes `targets_f.csv` (stress level, target mean,
/// multiplier, transport cost) and, per metric `m`, `m_f.csv` and `m_f.svg`.
pub fn run(config: &ExperimentConfig, report: Report) -> Result<RunSummary> {
    let columns: Option<Vec<&str>> = config
        .columns
        .as_ref()
        .map(|c| c.iter().map(String::as_str).collect());
    let ds = load_csv(&config.data, columns.as_deref())?.dataset;
    config.check_columns(&ds)?;
    let metric_kinds = match report {
        Report::Response if config.task == Task::Classification => vec![MetricKind::Pp1],
        Report::Response => vec![MetricKind::MeanVar],
        Report::DisparateImpact => {
            let sensitive = config
                .sensitive
                .clone()
                .ok_or_else(|| Error::Config("disparate impact needs a sensitive column".into()))?;
            if config.task != Task::Classification {
                return Err(Error::Config(
                    "disparate impact needs a classification task".into(),
                ));
            }
            vec![MetricKind::DisparateImpact { sensitive }]
        }
    };

    let (train, test) = ds.split(config.train_fraction, config.seed)?;
    let models = build_models(config, &train)?;
    let test_x = test.without_column(&config.target)?;
    let opts = config.solver_options();
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;

    let mut summary = RunSummary::default();
    for feature in &config.features {
        let j = test_x.column_index(feature)?;
        let sweep = make_sweep(&test_x, j, config.taus, config.alpha)?;
        let outputs = run_sweep(&test_x, &sweep, config.mode, &opts);

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "tau", "target", "lambda", "squared_cost"])?;
        for ((tau, target), out) in sweep.taus.iter().zip(&sweep.targets).zip(&outputs) {
            let (lambda, cost) = match out {
                Ok(p) => (csv_number(p.multiplier.lambda[0]), csv_number(p.squared_cost)),
                Err(_) => (String::new(), String::new()),
            };
            w.write_record([feature.clone(), tau.to_string(), target.to_string(), lambda, cost])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io {
            path: PathBuf::from("<memory>"),
            source: e.into_error(),
        })?;
        write_file(
            &config.out.join(format!("targets_{}.csv", file_stem(feature))),
            &bytes,
            &mut summary,
        )?;

        for kind in &metric_kinds {
            let series = series_over_sweep(&models, &sweep, &outputs, kind, config.confidence)?;
            for s in &series {
                for (i, message) in &s.failures {
                    summary.failures.push(CellFailure {
                        feature: feature.clone(),
                        tau: s.taus[*i],
                        model: s.model_name.clone(),
                        message: message.clone(),
                    });
                }
            }
            let mut metric_names: Vec<&str> = Vec::new();
            for s in &series {
                if !metric_names.contains(&s.metric_name.as_str()) {
                    metric_names.push(&s.metric_name);
                }
            }
            for metric in metric_names {
                let group: Vec<&MetricSeries> = series.iter().filter(|s| s.metric_name == metric).collect();
                let stem = format!("{}_{}", metric, file_stem(feature));
                let table = metric_table(feature, &group)?;
                write_file(&config.out.join(format!("{stem}.csv")), &table, &mut summary)?;
                let owned: Vec<MetricSeries> = group.into_iter().cloned().collect();
                let title = format!("{metric} under stress on {feature}");
                let chart = render_svg(&owned, &title, metric)?;
                write_file(
                    &config.out.join(format!("{stem}.svg")),
                    chart.as_bytes(),
                    &mut summary,
                )?;
            }
        }
    }
    Ok(summary)
}

fn parse_family(name: &str, ds: &EmpiricalDataset, on: &[String]) -> Result<Family> {
    let idx = on
        .iter()
        .map(|c| ds.column_index(c))
        .collect::<Result<Vec<_>>>()?;
    let arity = |want: usize| {
        if idx.len() == want {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "family `{name}` takes {want} column(s) via --on, got {}",
                idx.len()
            )))
        }
    };
    match name {
        "linear" => Ok(Family::Linear(idx)),
        "norm" => {
            if !idx.is_empty() {
                return Err(Error::InvalidArgument(
                    "family `norm` uses every column; drop --on".into(),
                ));
            }
            Ok(Family::Norm)
        }
        "quadratic" => Ok(Family::Quadratic(idx)),
        "linear-quadratic" => arity(1).map(|_| Family::LinearQuadratic(idx[0])),
        "cross" => arity(2).map(|_| Family::CrossProduct(idx[0], idx[1])),
        "linear-cross" => arity(2).map(|_| Family::LinearCross(idx[0], idx[1])),
        _ => Err(Error::InvalidArgument(format!(
            "unknown constraint family `{name}`"
        ))),
    }
}

/// The dataset, the constraint, and the stress level (if any) named by the
/// flags.
fn resolve_constraint(args: &ConstraintArgs, ds: &EmpiricalDataset) -> Result<(ConstraintSpec, Option<f64>)> {
    let mode = parse_mode(&args.mode)?;
    match (&args.value, &args.feature) {
        (Some(value), None) => {
            let family = parse_family(&args.family, ds, &args.on)?;
            Ok((ConstraintSpec::new(family, value.clone(), mode)?, None))
        }
        (None, Some(feature)) => {
            if args.family != "linear" || !args.on.is_empty() {
                return Err(Error::InvalidArgument(
                    "--feature stresses a mean; use it without --family/--on".into(),
                ));
            }
            let tau = args
                .tau
                .ok_or_else(|| Error::InvalidArgument("--feature needs --tau".into()))?;
            let j = ds.column_index(feature)?;
            let t = stress_target(ds, j, tau, args.alpha)?;
            Ok((
                ConstraintSpec::new(Family::Linear(vec![j]), vec![t], mode)?,
                Some(tau),
            ))
        }
        _ => Err(Error::InvalidArgument(
            "give exactly one of --value or --feature".into(),
        )),
    }
}

fn solver_options(args: &ConstraintArgs) -> SolverOptions {
    let mut opts = SolverOptions::default();
    if let Some(tol) = args.tol {
        opts = SolverOptions::with_tol(tol);
    }
    if let Some(m) = args.max_iter {
        opts = opts.max_iter(m);
    }
    opts
}

fn load(args: &ConstraintArgs) -> Result<EmpiricalDataset> {
    let columns: Option<Vec<&str>> = args
        .columns
        .as_ref()
        .map(|c| c.iter().map(String::as_str).collect());
    Ok(load_csv(&args.data, columns.as_deref())?.dataset)
}

fn run_project(args: ProjectArgs) -> Result<u8> {
    let ds = load(&args.constraint)?;
    let (spec, tau) = resolve_constraint(&args.constraint, &ds)?;
    let proj = project(&ds, &spec, &solver_options(&args.constraint))?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            proj.write_csv(std::io::BufWriter::new(file), tau)?;
        }
        None => proj.write_csv(std::io::stdout().lock(), tau)?,
    }
    eprintln!(
        "lambda={:?} squared_cost={} method={:?} iterations={} residual={:e}",
        proj.multiplier.lambda,
        proj.squared_cost,
        proj.multiplier.method,
        proj.multiplier.iterations,
        proj.multiplier.residual_norm()
    );
    Ok(0)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_check(args: CheckArgs) -> Result<u8> {
    let full = load(&args.constraint)?;
    let ds = if full.n() > args.max_rows {
        let mut idx: Vec<usize> = (0..full.n()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(args.seed));
        idx.truncate(args.max_rows);
        idx.sort_unstable();
        eprintln!("subsampled {} of {} rows", args.max_rows, full.n());
        full.select_rows(&idx)?
    } else {
        full
    };
    let (spec, _) = resolve_constraint(&args.constraint, &ds)?;
    let opts = solver_options(&args.constraint);
    let proj = project(&ds, &spec, &opts)?;
    let mut stdout = std::io::stdout().lock();
    let mut all_ok = true;
    let mut line = |ok: bool, text: String| -> Result<()> {
        all_ok &= ok;
        writeln!(stdout, "{} {text}", pass(ok)).map_err(|e| Error::io("<stdout>", e))
    };

    let scale = spec.target.iter().fold(1.0_f64, |a, t| a.max(t.abs()));
    let tol = match proj.multiplier.method {
        Method::ClosedForm => opts.closed_form_tol,
        Method::DualAscent => opts.ascent_tol,
    } * scale;
    let res = proj.multiplier.residual_norm();
    let feasible = match spec.mode {
        Mode::Equality => res <= tol,
        Mode::InequalityGe => proj.multiplier.residual.iter().all(|&r| r <= tol),
    };
    line(feasible, format!("feasibility: residual {res:e} (tol {tol:e})"))?;

    let cert = solver::certify(&ds, &spec, &proj.multiplier)?;
    let gap_tol = 1e-6 * cert.primal_value.abs().max(1.0);
    line(
        cert.gap.abs() <= gap_tol,
        format!(
            "duality: primal {} dual {} gap {:e}",
            cert.primal_value, cert.dual_value, cert.gap
        ),
    )?;

    let report = optimality_check(&ds, &spec, &proj, args.trials, args.seed, &opts)?;
    line(
        report.passed(),
        format!(
            "optimality: map cost {} exact cost {} competitors {} (skipped {}) min competitor {} violations {}",
            report.map_cost,
            report.exact_cost,
            report.trials,
            report.skipped,
            report.min_competitor_cost,
            report.violations.len()
        ),
    )?;

    if args.consistency_seeds > 0 {
        let n = ds.n();
        let mut sizes: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|&s| s >= 2).collect();
        sizes.dedup();
        if sizes.len() >= 2 {
            let seeds: Vec<u64> = (0..args.consistency_seeds as u64)
                .map(|s| args.seed + s)
                .collect();
            let curve = consistency_curve(&ds, &spec, &sizes, &seeds, Resampling::WithReplacement, &opts)?;
            let xs: Vec<f64> = curve.iter().map(|p| p.size as f64).collect();
            let ys: Vec<f64> = curve.iter().map(|p| p.median).collect();
            let rho = metrics::spearman(&xs, &ys);
            let medians: Vec<String> = curve
                .iter()
                .map(|p| format!("{}:{:.3e}", p.size, p.median))
                .collect();
            line(
                rho <= -0.8,
                format!("consistency: spearman {rho} medians [{}]", medians.join(", ")),
            )?;
        }
    }
    Ok(if all_ok { 0 } else { EXIT_CHECK_FAILED })
}

fn run_serve(args: ServeArgs) -> Result<u8> {
    let task = Task::from_wire(&args.task)?;
    let spec = ModelSpec::parse(&args.model)?;
    let model = match (&args.data, &args.features) {
        (Some(data), None) => {
            let target = args
                .target
                .clone()
                .ok_or_else(|| Error::InvalidArgument("--data needs --target".into()))?;
            let config = ExperimentConfig {
                data: data.clone(),
                columns: None,
                target,
                task,
                sensitive: None,
                models: vec![(args.model.clone(), spec)],
                features: Vec::new(),
                taus: 3,
                alpha: crate::stress::DEFAULT_ALPHA,
                mode: Mode::Equality,
                tol: SolverOptions::default().closed_form_tol,
                max_iter: SolverOptions::default().max_iter,
                seed: args.seed,
                train_fraction: 0.8,
                confidence: 0.95,
                out: PathBuf::new(),
            };
            let train = load_csv(data, None)?.dataset;
            build_models(&config, &train)?.remove(0)
        }
        (None, Some(names)) => match spec {
            ModelSpec::Constant { value } => models::constant_model(names, task, value),
            ModelSpec::Threshold { column, cutoff } => {
                let j = names
                    .iter()
                    .position(|n| *n == column)
                    .ok_or(Error::UnknownColumn(column))?;
                models::threshold_model(names, j, cutoff, Direction::Ge)?
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "model `{}` must be trained; give --data and --target",
                    args.model
                )))
            }
        },
        _ => {
            return Err(Error::InvalidArgument(
                "give exactly one of --data or --features".into(),
            ))
        }
    };
    if matches!(model.kind, models::ModelKind::External(_)) {
        return Err(Error::InvalidArgument("serve only runs built-in models".into()));
    }
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    models::protocol::serve(&model, stdin, stdout)?;
    Ok(0)
}
