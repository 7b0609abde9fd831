//! Per-patient fitting and scoring under the holdout protocol: the first
//! `train_count` observations train, the final observation is scored.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_gompertz_bayesian, fit_pinn_bayesian, fit_pure_gompertz, fit_pure_pinn, GompertzFit, PinnPosterior};
use crate::energy::EnergyConfig;
use crate::error::{Error, Result};
use crate::gp::{fit_bayesian_gp, fit_pure_gp, GpModel, GpPosterior};
use crate::hmc::{sample_posterior, HmcConfig, PosteriorSamples};
use crate::map::{map_fit, MapConfig, MapResult};
use crate::math::sqrt;
use crate::predictive::{
    add_observation_noise, calibration_case, coverage, error_metrics, interval_score, predictive_trajectories,
    rel_ci_width, CalibrationCase, PredictiveSummary, Trajectories, CALIBRATION_LEVELS,
};
use crate::series::LongitudinalSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    PinnBayesian,
    PurePinn,
    GompertzBayesian,
    BayesianGp,
    PureGp,
    PureGompertz,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Proposed,
        Method::PinnBayesian,
        Method::PurePinn,
        Method::GompertzBayesian,
        Method::BayesianGp,
        Method::PureGp,
        Method::PureGompertz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::PinnBayesian => "pinn_bayesian",
            Method::PurePinn => "pure_pinn",
            Method::GompertzBayesian => "gompertz_bayesian",
            Method::BayesianGp => "bayesian_gp",
            Method::PureGp => "pure_gp",
            Method::PureGompertz => "pure_gompertz",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Proposed => "Bayesian PINN",
            Method::PinnBayesian => "PINN + Bayesian",
            Method::PurePinn => "Pure PINN",
            Method::GompertzBayesian => "Gompertz + Bayesian",
            Method::BayesianGp => "Bayesian GP",
            Method::PureGp => "Pure GP",
            Method::PureGompertz => "Pure Gompertz",
        }
    }

    /// Produces predictive bands; the others are point predictors.
    pub fn has_intervals(self) -> bool {
        matches!(
            self,
            Method::Proposed | Method::PinnBayesian | Method::GompertzBayesian | Method::BayesianGp
        )
    }

    pub fn uses_map(self) -> bool {
        matches!(self, Method::Proposed | Method::PinnBayesian)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Nominal level of the reported band.
    pub level: f64,
    pub calibration_levels: Vec<f64>,
    /// Add observation noise to predictive draws before forming bands.
    pub observation_noise: bool,
    /// Observations used for training; the final observation is held out.
    pub train_count: usize,
    /// Sd of the Gaussian hyperprior of the Bayesian GP.
    pub gp_prior_sd: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            level: 0.95,
            calibration_levels: CALIBRATION_LEVELS.to_vec(),
            observation_noise: true,
            train_count: 2,
            gp_prior_sd: 1.0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::arg("level must lie in (0, 1)"));
        }
        if self.calibration_levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::arg("calibration levels must lie in (0, 1)"));
        }
        if self.train_count < 2 {
            return Err(Error::arg("train_count must be at least 2"));
        }
        if !(self.gp_prior_sd > 0.0) {
            return Err(Error::arg("gp_prior_sd must be positive"));
        }
        Ok(())
    }
}

/// Every setting a method needs, seeds excluded.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub energy: EnergyConfig,
    pub map: MapConfig,
    pub hmc: HmcConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.hmc.validate()?;
        self.eval.validate()
    }

    /// Copies with every seed set to the patient seed.
    pub fn seeded(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.map.seed = seed;
        c.hmc.seed = seed;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedMethod {
    Kinetic {
        samples: PosteriorSamples,
        map: Option<MapResult>,
    },
    Pinn {
        posterior: PinnPosterior,
        map: MapResult,
    },
    PointPinn(MapResult),
    PointGompertz(GompertzFit),
    PointGp(GpModel),
    BayesianGp(GpPosterior),
}

impl FittedMethod {
    pub fn acceptance_rate(&self) -> Option<f64> {
        match self {
            FittedMethod::Kinetic { samples, .. } => Some(samples.acceptance_rate),
            FittedMethod::Pinn { posterior, .. } => Some(posterior.acceptance_rate()),
            FittedMethod::BayesianGp(p) => Some(p.acceptance_rate),
            _ => None,
        }
    }

    /// Latent log-volume draws on `times`; `None` for point predictors.
    pub fn trajectories(&self, times: &[f64], seed: u64) -> Result<Option<Trajectories>> {
        Ok(match self {
            FittedMethod::Kinetic { samples, .. } => Some(predictive_trajectories(samples, times)?),
            FittedMethod::Pinn { posterior, .. } => Some(posterior.trajectories(times)?),
            FittedMethod::BayesianGp(p) => Some(p.trajectories(times, false, seed)?),
            _ => None,
        })
    }

    /// Observation noise sd, one value or one per draw.
    pub fn noise_sd(&self, energy: &EnergyConfig) -> Vec<f64> {
        match self {
            FittedMethod::Kinetic { samples, .. } => samples.sigma_v.clone().unwrap_or_else(|| vec![energy.sigma_d]),
            FittedMethod::BayesianGp(p) => p.models.iter().map(|m| sqrt(m.noise_var())).collect(),
            _ => vec![energy.sigma_d],
        }
    }

    /// Point log predictions of the point methods.
    pub fn point(&self, times: &[f64]) -> Option<Vec<f64>> {
        match self {
            FittedMethod::PointPinn(m) => Some(times.iter().map(|&t| m.predict(t)).collect()),
            FittedMethod::PointGompertz(f) => Some(times.iter().map(|&t| f.params.closed_form_log(t)).collect()),
            FittedMethod::PointGp(g) => Some(times.iter().map(|&t| g.predict(t).0).collect()),
            _ => None,
        }
    }

    /// Band summary on `times`. The band includes observation noise when
    /// `with_noise`; the means are always those of the latent draws.
    pub fn summary(&self, times: &[f64], level: f64, with_noise: bool, energy: &EnergyConfig, seed: u64) -> Result<PredictiveSummary> {
        if let Some(p) = self.point(times) {
            return PredictiveSummary::point(times.to_vec(), p);
        }
        let latent = self.trajectories(times, seed)?.expect("probabilistic method");
        let mut summary = PredictiveSummary::from_trajectories(&latent, level)?;
        if with_noise {
            let noisy = add_observation_noise(&latent, &self.noise_sd(energy), seed)?;
            let band = PredictiveSummary::from_trajectories(&noisy, level)?;
            summary.lo_log = band.lo_log;
            summary.hi_log = band.hi_log;
            summary.lo_vol = band.lo_vol;
            summary.hi_vol = band.hi_vol;
        }
        Ok(summary)
    }
}

/// Fits one method. `map` reuses an existing MAP fit for the methods that
/// start from one; it must come from the same training slice and settings.
pub fn fit_method(method: Method, training: &LongitudinalSeries, cfg: &PipelineConfig, map: Option<&MapResult>) -> Result<FittedMethod> {
    let fresh_map = || map_fit(training, &cfg.energy, &cfg.map);
    Ok(match method {
        Method::Proposed => {
            let map = match map {
                Some(m) => m.clone(),
                None => fresh_map()?,
            };
            let samples = sample_posterior(training, &map, &cfg.hmc, &cfg.energy)?;
            FittedMethod::Kinetic { samples, map: Some(map) }
        }
        Method::PinnBayesian => {
            let map = match map {
                Some(m) => m.clone(),
                None => fresh_map()?,
            };
            let posterior = fit_pinn_bayesian(training, &map, &cfg.energy, &cfg.hmc)?;
            FittedMethod::Pinn { posterior, map }
        }
        Method::PurePinn => FittedMethod::PointPinn(fit_pure_pinn(training, &cfg.energy, &cfg.map)?),
        Method::GompertzBayesian => FittedMethod::Kinetic {
            samples: fit_gompertz_bayesian(training, &cfg.energy, &cfg.hmc)?,
            map: None,
        },
        Method::BayesianGp => FittedMethod::BayesianGp(fit_bayesian_gp(training, &cfg.hmc, cfg.eval.gp_prior_sd)?),
        Method::PureGp => FittedMethod::PointGp(fit_pure_gp(training)?),
        Method::PureGompertz => FittedMethod::PointGompertz(fit_pure_gompertz(training, &cfg.energy)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub patient_id: String,
    pub method: Method,
    /// Residual metrics over the held-out observations.
    pub rmse_log: f64,
    pub rmse_vol: f64,
    pub mae_log: f64,
    pub mae_vol: f64,
    pub coverage95: Option<f64>,
    /// Empirical coverage minus the nominal level.
    pub coverage_dev: Option<f64>,
    /// Over all observation times, training and held-out.
    pub rel_ci_width: Option<f64>,
    /// Winkler score in volume units, averaged over held-out observations.
    pub interval_score: Option<f64>,
    pub interval_score_log: Option<f64>,
    pub acceptance_rate: Option<f64>,
    /// Signed `observed - predicted` per held-out observation.
    pub holdout_error_log: Vec<f64>,
    pub holdout_error_vol: Vec<f64>,
    pub calibration: Vec<CalibrationCase>,
}

/// Scores a fitted method against the held-out slice.
pub fn score(
    method: Method,
    fitted: &FittedMethod,
    training: &LongitudinalSeries,
    test: &LongitudinalSeries,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<EvalReport> {
    let times: Vec<f64> = training.times().iter().chain(test.times()).copied().collect();
    let n_train = training.len();
    let eval = &cfg.eval;
    let obs_log = test.log_volumes();
    let obs_vol = test.volumes();
    let mut report = EvalReport {
        patient_id: String::from(test.patient_id()),
        method,
        rmse_log: 0.0,
        rmse_vol: 0.0,
        mae_log: 0.0,
        mae_vol: 0.0,
        coverage95: None,
        coverage_dev: None,
        rel_ci_width: None,
        interval_score: None,
        interval_score_log: None,
        acceptance_rate: fitted.acceptance_rate(),
        holdout_error_log: Vec::new(),
        holdout_error_vol: Vec::new(),
        calibration: Vec::new(),
    };

    let summary = fitted.summary(&times, eval.level, eval.observation_noise, &cfg.energy, seed)?;
    let pred_log = &summary.mean_log[n_train..];
    let pred_vol = &summary.mean_vol[n_train..];
    let m = error_metrics(pred_log, pred_vol, obs_log, obs_vol)?;
    report.rmse_log = m.rmse_log;
    report.rmse_vol = m.rmse_vol;
    report.mae_log = m.mae_log;
    report.mae_vol = m.mae_vol;
    report.holdout_error_log = obs_log.iter().zip(pred_log).map(|(o, p)| o - p).collect();
    report.holdout_error_vol = obs_vol.iter().zip(pred_vol).map(|(o, p)| o - p).collect();

    if method.has_intervals() {
        let lo = &summary.lo_log[n_train..];
        let hi = &summary.hi_log[n_train..];
        let cov = coverage(obs_log, lo, hi)?;
        report.coverage95 = Some(cov);
        report.coverage_dev = Some(cov - eval.level);
        report.rel_ci_width = Some(rel_ci_width(&summary.lo_vol, &summary.hi_vol, &summary.mean_vol)?);
        let mut is_vol = 0.0;
        let mut is_log = 0.0;
        for (j, i) in (n_train..times.len()).enumerate() {
            is_vol += interval_score(summary.lo_vol[i], summary.hi_vol[i], obs_vol[j], eval.level)?;
            is_log += interval_score(summary.lo_log[i], summary.hi_log[i], obs_log[j], eval.level)?;
        }
        report.interval_score = Some(is_vol / test.len() as f64);
        report.interval_score_log = Some(is_log / test.len() as f64);

        let latent = fitted.trajectories(test.times(), seed)?.expect("probabilistic method");
        let draws = if eval.observation_noise {
            add_observation_noise(&latent, &fitted.noise_sd(&cfg.energy), seed ^ 0x5eed)?
        } else {
            latent
        };
        for (j, obs) in obs_log.iter().enumerate() {
            report.calibration.push(calibration_case(&draws.column(j), &eval.calibration_levels, *obs)?);
        }
    }
    Ok(report)
}

/// Outcome of one method on one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub result: Result<(FittedMethod, EvalReport)>,
}

/// Fits every requested method on one training slice with `cfg` as given.
/// A MAP fit is shared between the methods that start from one.
pub fn fit_methods(training: &LongitudinalSeries, methods: &[Method], cfg: &PipelineConfig) -> Vec<(Method, Result<FittedMethod>)> {
    let mut shared_map: Option<Result<MapResult>> = None;
    methods
        .iter()
        .map(|&method| {
            let fitted = (|| {
                let map = if method.uses_map() {
                    let m = shared_map.get_or_insert_with(|| map_fit(training, &cfg.energy, &cfg.map));
                    Some(m.as_ref().map_err(Clone::clone)?)
                } else {
                    None
                };
                fit_method(method, training, cfg, map)
            })();
            (method, fitted)
        })
        .collect()
}

/// Splits the series, fits every requested method with seeds set to `seed`
/// and scores it on the held-out observation.
pub fn evaluate_patient(series: &LongitudinalSeries, methods: &[Method], cfg: &PipelineConfig, seed: u64) -> Result<Vec<MethodOutcome>> {
    cfg.validate()?;
    let (training, test) = series.holdout_split(cfg.eval.train_count)?;
    let cfg = cfg.seeded(seed);
    Ok(fit_methods(&training, methods, &cfg)
        .into_iter()
        .map(|(method, fitted)| MethodOutcome {
            method,
            result: fitted.and_then(|f| {
                let report = score(method, &f, &training, &test, &cfg, seed)?;
                Ok((f, report))
            }),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::DEFAULT_LAYER_SIZES;

    fn quick() -> PipelineConfig {
        PipelineConfig {
            map: MapConfig {
                epochs: 40,
                layer_sizes: vec![1, 8, 8, 1],
                ..MapConfig::default()
            },
            hmc: HmcConfig {
                n_samples: 40,
                burn_in: 10,
                ..HmcConfig::default()
            },
            energy: EnergyConfig {
                n_collocation: 20,
                ..EnergyConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    fn series() -> LongitudinalSeries {
        LongitudinalSeries::new("P0001", vec![0.0, 380.0, 720.0], vec![150.0, 260.0, 300.0]).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
        assert_eq!(DEFAULT_LAYER_SIZES.len(), 5);
    }

    #[test]
    fn every_method_scores() {
        let out = evaluate_patient(&series(), &Method::ALL, &quick(), 7).unwrap();
        assert_eq!(out.len(), 7);
        for o in &out {
            let (_, r) = o.result.as_ref().unwrap();
            assert_eq!(r.method, o.method);
            assert!(r.rmse_log >= 0.0 && r.mae_vol >= 0.0);
            assert_eq!(r.holdout_error_log.len(), 1);
            assert_eq!(r.coverage95.is_some(), o.method.has_intervals());
            assert_eq!(r.interval_score.is_some(), o.method.has_intervals());
            if let Some(c) = r.coverage95 {
                assert!((0.0..=1.0).contains(&c));
                assert_eq!(r.calibration.len(), 1);
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let a = evaluate_patient(&series(), &[Method::Proposed, Method::BayesianGp], &quick(), 3).unwrap();
        let b = evaluate_patient(&series(), &[Method::Proposed, Method::BayesianGp], &quick(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shared_map_matches_fresh_fit() {
        let cfg = quick().seeded(5);
        let (training, _) = series().holdout_split(2).unwrap();
        let map = map_fit(&training, &cfg.energy, &cfg.map).unwrap();
        let shared = fit_method(Method::Proposed, &training, &cfg, Some(&map)).unwrap();
        let fresh = fit_method(Method::Proposed, &training, &cfg, None).unwrap();
        assert_eq!(shared, fresh);
    }

    #[test]
    fn short_series_is_rejected() {
        let s = LongitudinalSeries::new("x", vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(evaluate_patient(&s, &[Method::PureGompertz], &quick(), 1).is_err());
    }
}
