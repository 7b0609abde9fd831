//! Cohort-level evaluation and method comparison.
//!
//! Patient `i` runs with seed `run_seed ^ i`, so adding or removing other
//! patients never changes its results. Patients may run on worker threads;
//! results are collected in cohort order.

use bpinn_core::evaluate::{evaluate_patient, EvalReport, FittedMethod, Method, MethodOutcome, PipelineConfig};
use bpinn_core::hmc::{chain_diagnostics, ChainDiagnostics, KineticDraw};
use bpinn_core::predictive::{calibration_curve, CalibrationCurve};
use bpinn_core::rng::series_seed;
use bpinn_core::LongitudinalSeries;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::{paired_stats, PairedStats};

/// Worker threads from `BPINN_THREADS`, or rayon's default when unset.
pub fn thread_count() -> Option<usize> {
    std::env::var("BPINN_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub patient_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub patient_id: String,
    pub method: Method,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub y0_hat: f64,
    pub final_energy: f64,
    pub data: f64,
    pub physics: f64,
    pub prior: f64,
}

/// Posterior draws and diagnostics kept for the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRecord {
    pub patient_id: String,
    pub method: Method,
    pub acceptance_rate: Option<f64>,
    pub map: Option<MapSummary>,
    pub diagnostics: Option<ChainDiagnostics>,
    /// Kinetic draws; for the full-weight PINN, the rates and the network value at `t0`.
    pub draws: Vec<KineticDraw>,
    pub degenerate_chain: bool,
}

fn map_summary(m: &bpinn_core::map::MapResult) -> MapSummary {
    MapSummary {
        alpha_hat: m.alpha_hat,
        beta_hat: m.beta_hat,
        y0_hat: m.y0_hat,
        final_energy: m.final_energy,
        data: m.final_terms.data,
        physics: m.final_terms.physics,
        prior: m.final_terms.prior,
    }
}

pub fn posterior_record(patient_id: &str, method: Method, fitted: &FittedMethod) -> PosteriorRecord {
    let mut rec = PosteriorRecord {
        patient_id: patient_id.to_string(),
        method,
        acceptance_rate: fitted.acceptance_rate(),
        map: None,
        diagnostics: None,
        draws: Vec::new(),
        degenerate_chain: false,
    };
    match fitted {
        FittedMethod::Kinetic { samples, map } => {
            rec.map = map.as_ref().map(map_summary);
            rec.diagnostics = chain_diagnostics(samples).ok();
            rec.draws = samples.draws.clone();
            rec.degenerate_chain = samples.degenerate_chain;
        }
        FittedMethod::Pinn { posterior, map } => {
            rec.map = Some(map_summary(map));
            let y0 = posterior.trajectories(&[map.t0]).map(|t| t.values().to_vec()).unwrap_or_default();
            rec.draws = posterior
                .rates()
                .into_iter()
                .zip(y0)
                .map(|((alpha, beta), y0)| KineticDraw { alpha, beta, y0 })
                .collect();
            rec.degenerate_chain = posterior.chain.accepted == 0;
        }
        FittedMethod::PointPinn(m) => rec.map = Some(map_summary(m)),
        FittedMethod::PointGompertz(f) => {
            rec.draws = vec![KineticDraw {
                alpha: f.params.alpha(),
                beta: f.params.beta(),
                y0: f.params.y0(),
            }]
        }
        FittedMethod::PointGp(_) | FittedMethod::BayesianGp(_) => {}
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample sd (n - 1); zero for a single value.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub patients: usize,
    pub failures: usize,
    pub metrics: Vec<MetricSummary>,
    pub calibration: Option<CalibrationCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortResults {
    pub seed: u64,
    pub methods: Vec<Method>,
    pub reports: Vec<EvalReport>,
    pub skipped: Vec<Skipped>,
    pub failures: Vec<Failure>,
    pub summary: Vec<MethodSummary>,
    pub posteriors: Vec<PosteriorRecord>,
}

pub const METRICS: [&str; 10] = [
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
];

pub fn metric(r: &EvalReport, name: &str) -> Option<f64> {
    match name {
        "rmse_log" => Some(r.rmse_log),
        "rmse_vol" => Some(r.rmse_vol),
        "mae_log" => Some(r.mae_log),
        "mae_vol" => Some(r.mae_vol),
        "coverage95" => r.coverage95,
        "coverage_dev" => r.coverage_dev,
        "rel_ci_width" => r.rel_ci_width,
        "interval_score" => r.interval_score,
        "interval_score_log" => r.interval_score_log,
        "acceptance_rate" => r.acceptance_rate,
        _ => None,
    }
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Per-method mean and sd of every metric over the report rows.
pub fn summarize(reports: &[EvalReport], methods: &[Method], failures: &[Failure], levels: &[f64]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rows: Vec<&EvalReport> = reports.iter().filter(|r| r.method == method).collect();
            let metrics = METRICS
                .iter()
                .filter_map(|name| {
                    let vals: Vec<f64> = rows.iter().filter_map(|r| metric(r, name)).collect();
                    (!vals.is_empty()).then(|| {
                        let (mean, sd) = mean_sd(&vals);
                        MetricSummary {
                            metric: name.to_string(),
                            n: vals.len(),
                            mean,
                            sd,
                        }
                    })
                })
                .collect();
            let cases: Vec<_> = rows.iter().flat_map(|r| r.calibration.iter().cloned()).collect();
            MethodSummary {
                method,
                patients: rows.len(),
                failures: failures.iter().filter(|f| f.method == method).count(),
                metrics,
                calibration: calibration_curve(levels, &cases).ok(),
            }
        })
        .collect()
}

/// Runs every method on every patient under the holdout protocol.
pub fn evaluate_cohort(series: &[LongitudinalSeries], methods: &[Method], cfg: &PipelineConfig, seed: u64) -> Result<CohortResults> {
    cfg.validate()?;
    let needed = cfg.eval.train_count + 1;
    let outcomes: Vec<(usize, Option<Vec<MethodOutcome>>)> = with_pool(|| {
        series
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                if s.len() < needed {
                    return (i, None);
                }
                (i, evaluate_patient(s, methods, cfg, series_seed(seed, s.patient_id())).ok())
            })
            .collect()
    });
    let mut results = CohortResults {
        seed,
        methods: methods.to_vec(),
        reports: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
        summary: Vec::new(),
        posteriors: Vec::new(),
    };
    for (i, outcome) in outcomes {
        let id = series[i].patient_id();
        let Some(outcome) = outcome else {
            results.skipped.push(Skipped {
                patient_id: id.to_string(),
                reason: format!("needs {needed} observations, has {}", series[i].len()),
            });
            continue;
        };
        for o in outcome {
            match o.result {
                Ok((fitted, report)) => {
                    results.posteriors.push(posterior_record(id, o.method, &fitted));
                    results.reports.push(report);
                }
                Err(e) => results.failures.push(Failure {
                    patient_id: id.to_string(),
                    method: o.method,
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                }),
            }
        }
    }
    results.summary = summarize(&results.reports, methods, &results.failures, &cfg.eval.calibration_levels);
    Ok(results)
}

/// Per-patient losses used by the paired tests.
fn losses(r: &EvalReport) -> (f64, f64) {
    let n = r.holdout_error_log.len() as f64;
    let sq_log = r.holdout_error_log.iter().map(|e| e * e).sum::<f64>() / n;
    let abs_vol = r.holdout_error_vol.iter().map(|e| e.abs()).sum::<f64>() / n;
    (sq_log, abs_vol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub patient_id: String,
    pub method: Method,
    pub sq_log_error: f64,
    pub reference_sq_log_error: f64,
    pub abs_vol_error: f64,
    pub reference_abs_vol_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub method: Method,
    pub reference: Method,
    /// `sq_log_error` or `abs_vol_error`.
    pub loss: String,
    /// `None` with fewer than three common patients.
    pub stats: Option<PairedStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: Method,
    pub summary: Vec<MethodSummary>,
    pub differences: Vec<PairedDifference>,
    pub paired: Vec<PairedRow>,
}

/// Pairs every method with the reference (the proposed method when present,
/// otherwise the first method) on the patients where both succeeded.
/// Differences are `method - reference`, so positive favours the reference.
pub fn compare(results: &CohortResults) -> Comparison {
    let reference = if results.methods.contains(&Method::Proposed) {
        Method::Proposed
    } else {
        results.methods[0]
    };
    let find = |id: &str, m: Method| results.reports.iter().find(|r| r.patient_id == id && r.method == m);
    let mut differences = Vec::new();
    let mut paired = Vec::new();
    for &method in results.methods.iter().filter(|m| **m != reference) {
        let mut diffs = Vec::new();
        for r in results.reports.iter().filter(|r| r.method == method) {
            if let Some(base) = find(&r.patient_id, reference) {
                let (sq, av) = losses(r);
                let (bsq, bav) = losses(base);
                diffs.push(PairedDifference {
                    patient_id: r.patient_id.clone(),
                    method,
                    sq_log_error: sq,
                    reference_sq_log_error: bsq,
                    abs_vol_error: av,
                    reference_abs_vol_error: bav,
                });
            }
        }
        let a: Vec<f64> = diffs.iter().map(|d| d.sq_log_error).collect();
        let b: Vec<f64> = diffs.iter().map(|d| d.reference_sq_log_error).collect();
        let av: Vec<f64> = diffs.iter().map(|d| d.abs_vol_error).collect();
        let bv: Vec<f64> = diffs.iter().map(|d| d.reference_abs_vol_error).collect();
        paired.push(PairedRow {
            method,
            reference,
            loss: "sq_log_error".into(),
            stats: paired_stats(&a, &b).ok(),
        });
        paired.push(PairedRow {
            method,
            reference,
            loss: "abs_vol_error".into(),
            stats: paired_stats(&av, &bv).ok(),
        });
        differences.extend(diffs);
    }
    Comparison {
        reference,
        summary: results.summary.clone(),
        differences,
        paired,
    }
}
