//! Synthetic cohorts drawn from the Gompertz observation model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gompertz::{checked_exp, GompertzParams, ObservationNoise};
use crate::prior::{default_alpha_prior, default_beta_prior, LogNormal, Normal};
use crate::rng::{patient_seed, seeded, standard_normal, stream};
use crate::series::LongitudinalSeries;

/// Simulate one series: `V_i = exp(y(t_i) + eps_i)`, `eps_i ~ N(0, sigma_v²)`.
/// `noise = None` gives the noiseless closed-form volumes.
pub fn simulate_series(
    params: &GompertzParams,
    noise: Option<ObservationNoise>,
    times: &[f64],
    seed: u64,
) -> Result<LongitudinalSeries> {
    let mut rng = seeded(seed, stream::SIMULATION);
    simulate_with(&mut rng, "synthetic".into(), params, noise, times)
}

fn simulate_with(
    rng: &mut crate::rng::Rng,
    patient_id: String,
    params: &GompertzParams,
    noise: Option<ObservationNoise>,
    times: &[f64],
) -> Result<LongitudinalSeries> {
    let mut volumes = Vec::with_capacity(times.len());
    for &t in times {
        let eps = match noise {
            Some(n) => n.sigma_v() * standard_normal(rng),
            None => 0.0,
        };
        volumes.push(checked_exp(params.closed_form_log(t) + eps)?);
    }
    LongitudinalSeries::new(patient_id, times.to_vec(), volumes)
}

/// Generator settings for a synthetic cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortConfig {
    pub alpha: LogNormal,
    pub beta: LogNormal,
    pub y0: Normal,
    /// Nominal visit days; the first visit is the baseline.
    pub visit_days: Vec<f64>,
    /// Half-width of the uniform jitter applied to every visit after the first.
    pub jitter_days: f64,
    /// Log-space noise sd; zero means noiseless.
    pub sigma_v: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            alpha: default_alpha_prior(),
            beta: default_beta_prior(),
            y0: Normal { mean: 5.0, sd: 1.0 },
            visit_days: vec![0.0, 365.0, 730.0],
            jitter_days: 60.0,
            sigma_v: 0.2,
        }
    }
}

/// A simulated series with the parameters that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPatient {
    pub series: LongitudinalSeries,
    pub truth: GompertzParams,
}

/// Draw `n_patients` independent patients. Patient `i` uses the seed
/// `seed ^ i`, so cohort prefixes are stable as the cohort grows.
pub fn simulate_cohort(n_patients: usize, config: &CohortConfig, seed: u64) -> Result<Vec<SyntheticPatient>> {
    if n_patients == 0 {
        return Err(Error::arg("cohort needs at least one patient"));
    }
    if config.visit_days.is_empty() {
        return Err(Error::arg("schedule needs at least one visit"));
    }
    if !(config.jitter_days >= 0.0) || !(config.sigma_v >= 0.0) {
        return Err(Error::arg("jitter and noise must be nonnegative"));
    }
    config.alpha.validate()?;
    config.beta.validate()?;
    config.y0.validate()?;
    let noise = if config.sigma_v > 0.0 {
        Some(ObservationNoise::new(config.sigma_v)?)
    } else {
        None
    };
    (0..n_patients)
        .map(|i| {
            let mut rng = seeded(patient_seed(seed, i), stream::SIMULATION);
            let times: Vec<f64> = config
                .visit_days
                .iter()
                .enumerate()
                .map(|(k, &day)| {
                    if k == 0 || config.jitter_days == 0.0 {
                        day
                    } else {
                        day + rng.random_range(-config.jitter_days..=config.jitter_days)
                    }
                })
                .collect();
            let alpha = libm::exp(config.alpha.mu + config.alpha.sigma * standard_normal(&mut rng));
            let beta = libm::exp(config.beta.mu + config.beta.sigma * standard_normal(&mut rng));
            let y0 = config.y0.mean + config.y0.sd * standard_normal(&mut rng);
            let truth = GompertzParams::new(alpha, beta, y0, times[0])?;
            let series = simulate_with(&mut rng, format!("P{:04}", i), &truth, noise, &times)?;
            Ok(SyntheticPatient { series, truth })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_series_is_closed_form() {
        let p = GompertzParams::new(0.2, 0.05, 1.0, 0.0).unwrap();
        let times = [0.0, 10.0, 40.0];
        let s = simulate_series(&p, None, &times, 1).unwrap();
        for (t, v) in times.iter().zip(s.volumes()) {
            assert_eq!(*v, p.closed_form_volume(*t).unwrap());
        }
    }

    #[test]
    fn seeded_simulation_is_deterministic() {
        let p = GompertzParams::new(0.2, 0.05, 1.0, 0.0).unwrap();
        let n = ObservationNoise::new(0.2).ok();
        let a = simulate_series(&p, n, &[0.0, 1.0, 2.0], 9).unwrap();
        let b = simulate_series(&p, n, &[0.0, 1.0, 2.0], 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_series(&p, n, &[0.0, 1.0, 2.0], 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_moments_match_sigma() {
        // 1e5 single-time replicates.
        let p = GompertzParams::new(0.2, 0.05, 3.0, 0.0).unwrap();
        let sigma = 0.2;
        let noise = ObservationNoise::new(sigma).ok();
        let truth = p.closed_form_log(5.0);
        let n = 100_000;
        let mut rng = seeded(77, stream::SIMULATION);
        let resid: Vec<f64> = (0..n)
            .map(|_| {
                let s = simulate_with(&mut rng, "x".into(), &p, noise, &[5.0]).unwrap();
                s.log_volumes()[0] - truth
            })
            .collect();
        let m = crate::math::mean(&resid);
        let sd = libm::sqrt(crate::math::variance(&resid));
        assert!(m.abs() < 3.0 * sigma / libm::sqrt(n as f64), "mean {m}");
        assert!((sd - sigma).abs() < 0.02 * sigma, "sd {sd}");
    }

    #[test]
    fn default_cohort_has_three_visits() {
        let cohort = simulate_cohort(30, &CohortConfig::default(), 3).unwrap();
        assert_eq!(cohort.len(), 30);
        for p in &cohort {
            assert_eq!(p.series.len(), 3);
            assert_eq!(p.truth.t0(), p.series.first_time());
        }
    }

    #[test]
    fn zero_jitter_shares_times() {
        let cfg = CohortConfig {
            jitter_days: 0.0,
            ..CohortConfig::default()
        };
        let cohort = simulate_cohort(10, &cfg, 5).unwrap();
        for p in &cohort {
            assert_eq!(p.series.times(), cohort[0].series.times());
        }
    }

    #[test]
    fn alpha_median_matches_prior_median() {
        let cohort = simulate_cohort(10_000, &CohortConfig::default(), 11).unwrap();
        let mut alphas: Vec<f64> = cohort.iter().map(|p| p.truth.alpha()).collect();
        alphas.sort_by(f64::total_cmp);
        let median = 0.5 * (alphas[4999] + alphas[5000]);
        assert!((median - 0.2).abs() < 0.1 * 0.2, "median {median}");
    }

    #[test]
    fn cohort_prefix_is_stable() {
        let small = simulate_cohort(5, &CohortConfig::default(), 21).unwrap();
        let large = simulate_cohort(8, &CohortConfig::default(), 21).unwrap();
        assert_eq!(&large[..5], &small[..]);
    }
}
