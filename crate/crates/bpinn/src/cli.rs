//! Subcommands. Each reads its inputs, runs, and writes every output file
//! after the work is joined.

use std::path::{Path, PathBuf};

use bpinn_core::evaluate::{fit_methods, Method};
use bpinn_core::predictive::uniform_grid;
use bpinn_core::rng::series_seed;
use bpinn_core::simulate::simulate_cohort;
use bpinn_core::LongitudinalSeries;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::cohort::{compare, evaluate_cohort, posterior_record, CohortResults, Comparison, Failure, PosteriorRecord, Skipped};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{self, num, opt};

#[derive(Debug, Parser)]
#[command(name = "bpinn", version, about = "Bayesian physics-informed tumor growth inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Draw a synthetic cohort and its ground truth.
    Simulate,
    /// Fit methods on each training split and write posterior draws.
    Fit,
    /// Write per-patient trajectory bands on a uniform grid.
    Predict,
    /// Score methods on the held-out observations.
    Evaluate,
    /// Score methods and write the comparison and paired-test tables.
    Compare,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub output: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub patients: Option<usize>,
    /// Comma-separated method names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    #[arg(long, global = true)]
    pub hmc_samples: Option<usize>,
    #[arg(long, global = true)]
    pub hmc_burnin: Option<usize>,
    #[arg(long, global = true)]
    pub hmc_step: Option<f64>,
    #[arg(long, global = true)]
    pub leapfrog: Option<usize>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
}

impl Options {
    /// Config file (or defaults) with flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.patients {
            cfg.patients = v;
        }
        if let Some(v) = &self.methods {
            cfg.methods = Some(v.clone());
        }
        if let Some(v) = self.grid_points {
            cfg.grid_points = v;
        }
        if let Some(v) = self.hmc_samples {
            cfg.hmc.n_samples = v;
        }
        if let Some(v) = self.hmc_burnin {
            cfg.hmc.burn_in = v;
        }
        if let Some(v) = self.hmc_step {
            cfg.hmc.step_size = v;
        }
        if let Some(v) = self.leapfrog {
            cfg.hmc.leapfrog_steps = v;
        }
        if let Some(v) = self.epochs {
            cfg.map.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.map.learning_rate = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Config("--input is required".into()))
    }
}

/// Parses the input cohort and prints its warnings.
fn load(path: &Path) -> Result<Vec<LongitudinalSeries>> {
    let cohort = io::load_cohort(path)?;
    for w in &cohort.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cohort.series)
}

pub fn run(command: Command, options: &Options) -> Result<()> {
    let cfg = options.resolve()?;
    let out = options.output.as_path();
    match command {
        Command::Simulate => run_simulate(&cfg, out),
        Command::Fit => run_fit(&cfg, &load(options.input()?)?, out),
        Command::Predict => run_predict(&cfg, &load(options.input()?)?, out),
        Command::Evaluate => run_evaluate(&cfg, &load(options.input()?)?, out).map(|_| ()),
        Command::Compare => run_compare(&cfg, &load(options.input()?)?, out).map(|_| ()),
    }
}

/// Writes `cohort.csv` and `truth.csv`.
pub fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let patients = simulate_cohort(cfg.patients, &cfg.cohort, cfg.seed)?;
    let series: Vec<LongitudinalSeries> = patients.iter().map(|p| p.series.clone()).collect();
    io::write_cohort(&out.join("cohort.csv"), &series)?;
    io::write_truth(&out.join("truth.csv"), &patients)
}

#[derive(Debug, Serialize)]
struct FitOutput {
    seed: u64,
    methods: Vec<Method>,
    posteriors: Vec<PosteriorRecord>,
    skipped: Vec<Skipped>,
    failures: Vec<Failure>,
}

fn split_training(s: &LongitudinalSeries, cfg: &RunConfig) -> std::result::Result<LongitudinalSeries, Skipped> {
    s.holdout_split(cfg.eval.train_count).map(|(train, _)| train).map_err(|e| Skipped {
        patient_id: s.patient_id().to_string(),
        reason: e.to_string(),
    })
}

/// Writes `posterior.json` with draws, MAP summaries and diagnostics.
pub fn run_fit(cfg: &RunConfig, series: &[LongitudinalSeries], out: &Path) -> Result<()> {
    let methods = cfg.methods_or(&[Method::Proposed]);
    let pipeline = cfg.pipeline();
    let fits: Vec<_> = series
        .par_iter()
        .map(|s| {
            let training = split_training(s, cfg)?;
            let seeded = pipeline.seeded(series_seed(cfg.seed, s.patient_id()));
            Ok(fit_methods(&training, &methods, &seeded)
                .into_iter()
                .map(|(m, f)| f.map(|f| posterior_record(s.patient_id(), m, &f)).map_err(|e| (m, e)))
                .collect::<Vec<_>>())
        })
        .collect();
    let mut output = FitOutput {
        seed: cfg.seed,
        methods,
        posteriors: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
    };
    for (s, fit) in series.iter().zip(fits) {
        match fit {
            Err(skip) => output.skipped.push(skip),
            Ok(records) => {
                for r in records {
                    match r {
                        Ok(rec) => output.posteriors.push(rec),
                        Err((method, e)) => output.failures.push(Failure {
                            patient_id: s.patient_id().to_string(),
                            method,
                            kind: e.kind().to_string(),
                            message: e.to_string(),
                        }),
                    }
                }
            }
        }
    }
    io::write_json(&out.join("posterior.json"), &output)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `trajectories/<patient>_<method>.csv` for every fitted method,
/// over a grid spanning all of the patient's observations.
pub fn run_predict(cfg: &RunConfig, series: &[LongitudinalSeries], out: &Path) -> Result<()> {
    let methods = cfg.methods_or(&[Method::Proposed]);
    let pipeline = cfg.pipeline();
    let results: Vec<_> = series
        .par_iter()
        .map(|s| {
            let Ok(training) = split_training(s, cfg) else {
                return Vec::new();
            };
            let seed = series_seed(cfg.seed, s.patient_id());
            let seeded = pipeline.seeded(seed);
            let grid = match uniform_grid(s.first_time(), s.last_time(), cfg.grid_points) {
                Ok(g) => g,
                Err(e) => return vec![(Method::Proposed, Err(Error::from(e)))],
            };
            fit_methods(&training, &methods, &seeded)
                .into_iter()
                .map(|(m, f)| {
                    let summary = f.and_then(|f| {
                        f.summary(&grid, cfg.eval.level, cfg.eval.observation_noise, &cfg.energy, seed)
                    });
                    (m, summary.map_err(Error::from))
                })
                .collect()
        })
        .collect();
    for (s, per_method) in series.iter().zip(results) {
        if per_method.is_empty() {
            eprintln!("warning: skipped {}: too few observations", s.patient_id());
        }
        for (m, summary) in per_method {
            match summary {
                Ok(summary) => {
                    let name = format!("{}_{}.csv", file_stem(s.patient_id()), m.name());
                    io::write_trajectory(&out.join("trajectories").join(name), &summary)?;
                }
                Err(e) => eprintln!("warning: {} {}: {e}", s.patient_id(), m.name()),
            }
        }
    }
    Ok(())
}

fn write_reports(path: &Path, results: &CohortResults) -> Result<()> {
    let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
    let rows: Vec<Vec<String>> = results
        .reports
        .iter()
        .map(|r| {
            vec![
                r.patient_id.clone(),
                r.method.name().to_string(),
                num(r.rmse_log),
                num(r.rmse_vol),
                num(r.mae_log),
                num(r.mae_vol),
                opt(r.coverage95),
                opt(r.coverage_dev),
                opt(r.rel_ci_width),
                opt(r.interval_score),
                opt(r.interval_score_log),
                opt(r.acceptance_rate),
                join(&r.holdout_error_log),
                join(&r.holdout_error_vol),
            ]
        })
        .collect();
    io::write_table(
        path,
        &[
            "patient_id",
            "method",
            "rmse_log",
            "rmse_vol",
            "mae_log",
            "mae_vol",
            "coverage95",
            "coverage_dev",
            "rel_ci_width",
            "interval_score",
            "interval_score_log",
            "acceptance_rate",
            "holdout_error_log",
            "holdout_error_vol",
        ],
        &rows,
    )
}

fn write_summary(out: &Path, results: &CohortResults) -> Result<()> {
    let mut rows = Vec::new();
    let mut cal = Vec::new();
    for s in &results.summary {
        for m in &s.metrics {
            rows.push(vec![s.method.name().to_string(), m.metric.clone(), m.n.to_string(), num(m.mean), num(m.sd)]);
        }
        if let Some(c) = &s.calibration {
            for p in &c.points {
                cal.push(vec![s.method.name().to_string(), num(p.nominal), num(p.empirical), num(c.mean_abs_gap)]);
            }
        }
    }
    io::write_table(&out.join("summary.csv"), &["method", "metric", "n", "mean", "sd"], &rows)?;
    io::write_table(&out.join("calibration.csv"), &["method", "nominal", "empirical", "mean_abs_gap"], &cal)
}

/// Writes `reports.csv`, `summary.csv`, `calibration.csv` and `results.json`.
pub fn run_evaluate(cfg: &RunConfig, series: &[LongitudinalSeries], out: &Path) -> Result<CohortResults> {
    let methods = cfg.methods_or(&[Method::Proposed]);
    let results = evaluate_cohort(series, &methods, &cfg.pipeline(), cfg.seed)?;
    for s in &results.skipped {
        eprintln!("warning: skipped {}: {}", s.patient_id, s.reason);
    }
    write_reports(&out.join("reports.csv"), &results)?;
    write_summary(out, &results)?;
    io::write_json(&out.join("results.json"), &results)?;
    Ok(results)
}

pub const COMPARISON_HEADER: [&str; 13] = [
    "method",
    "label",
    "patients",
    "failures",
    "rmse_log",
    "rmse_vol",
    "mae_log",
    "mae_vol",
    "rel_ci_width",
    "interval_score",
    "coverage95",
    "coverage_dev",
    "acceptance_rate",
];

fn write_comparison(out: &Path, c: &Comparison) -> Result<()> {
    let rows: Vec<Vec<String>> = c
        .summary
        .iter()
        .map(|s| {
            let get = |name: &str| opt(s.metrics.iter().find(|m| m.metric == name).map(|m| m.mean));
            let mut row = vec![
                s.method.name().to_string(),
                s.method.label().to_string(),
                s.patients.to_string(),
                s.failures.to_string(),
            ];
            row.extend(COMPARISON_HEADER[4..].iter().map(|name| get(name)));
            row
        })
        .collect();
    io::write_table(&out.join("comparison.csv"), &COMPARISON_HEADER, &rows)?;

    let rows: Vec<Vec<String>> = c
        .paired
        .iter()
        .map(|p| {
            let mut row = vec![p.method.name().to_string(), p.reference.name().to_string(), p.loss.clone()];
            match &p.stats {
                Some(s) => row.extend([
                    s.n.to_string(),
                    num(s.mean_diff),
                    opt(s.t_statistic),
                    num(s.t_p),
                    num(s.wilcoxon_p),
                    s.wilcoxon_exact.to_string(),
                    opt(s.cohens_dz),
                    s.wins.0.to_string(),
                    s.wins.1.to_string(),
                    s.wins.2.to_string(),
                    s.degenerate.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n("NA".to_string(), 11)),
            }
            row
        })
        .collect();
    io::write_table(
        &out.join("paired_stats.csv"),
        &[
            "method",
            "reference",
            "loss",
            "n",
            "mean_diff",
            "t_statistic",
            "t_p",
            "wilcoxon_p",
            "wilcoxon_exact",
            "cohens_dz",
            "reference_better",
            "method_better",
            "ties",
            "degenerate",
        ],
        &rows,
    )?;

    let rows: Vec<Vec<String>> = c
        .differences
        .iter()
        .map(|d| {
            vec![
                d.patient_id.clone(),
                d.method.name().to_string(),
                c.reference.name().to_string(),
                num(d.sq_log_error),
                num(d.reference_sq_log_error),
                num(d.sq_log_error - d.reference_sq_log_error),
                num(d.abs_vol_error),
                num(d.reference_abs_vol_error),
                num(d.abs_vol_error - d.reference_abs_vol_error),
            ]
        })
        .collect();
    io::write_table(
        &out.join("paired_differences.csv"),
        &[
            "patient_id",
            "method",
            "reference",
            "sq_log_error",
            "reference_sq_log_error",
            "diff_sq_log_error",
            "abs_vol_error",
            "reference_abs_vol_error",
            "diff_abs_vol_error",
        ],
        &rows,
    )
}

/// Everything `evaluate` writes plus `comparison.csv`, `paired_stats.csv`
/// and `paired_differences.csv`. Runs all methods unless restricted.
pub fn run_compare(cfg: &RunConfig, series: &[LongitudinalSeries], out: &Path) -> Result<Comparison> {
    let mut cfg = cfg.clone();
    cfg.methods = Some(cfg.methods_or(&Method::ALL));
    let results = run_evaluate(&cfg, series, out)?;
    let comparison = compare(&results);
    write_comparison(out, &comparison)?;
    Ok(comparison)
}
