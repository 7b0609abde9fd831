//! Monte Carlo checks of the samplers and baselines.

use bpinn_core::baselines::{fit_gompertz_bayesian, fit_pure_gompertz, fit_pure_pinn};
use bpinn_core::energy::EnergyConfig;
use bpinn_core::evaluate::{evaluate_patient, Method, PipelineConfig};
use bpinn_core::gompertz::{GompertzParams, ObservationNoise};
use bpinn_core::gp::fit_pure_gp;
use bpinn_core::hmc::{run_chain, HmcConfig, StandardGaussian};
use bpinn_core::map::MapConfig;
use bpinn_core::predictive::central_interval;
use bpinn_core::rng::patient_seed;
use bpinn_core::simulate::{simulate_cohort, simulate_series, CohortConfig};
use bpinn_core::LongitudinalSeries;

fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn gaussian_hook(seed: u64) -> HmcConfig {
    HmcConfig {
        step_size: 0.1,
        leapfrog_steps: 15,
        n_samples: 3100,
        burn_in: 100,
        seed,
        ..HmcConfig::default()
    }
}

#[test]
fn chain_halves_agree() {
    // Two-sample KS critical value at 1%: 1.628 * sqrt((n + m) / (n m)).
    let half = 1500.0f64;
    let critical = 1.628 * (2.0 / half).sqrt();
    let mut below = 0;
    for seed in 0..100 {
        let chain = run_chain(&mut StandardGaussian { dim: 3 }, &[0.0, 0.0, 0.0], &gaussian_hook(seed)).unwrap();
        let col: Vec<f64> = (0..chain.n_draws()).map(|i| chain.draw(i)[0]).collect();
        let (first, second) = col.split_at(col.len() / 2);
        if ks_statistic(first, second) < critical {
            below += 1;
        }
    }
    assert!(below >= 95, "{below} of 100 below the critical value");
}

#[test]
fn truth_inside_posterior_box() {
    let truth = GompertzParams::new(0.2, 0.05, 5.0, 0.0).unwrap();
    let noise = ObservationNoise::new(0.2).unwrap();
    let energy = EnergyConfig::default();
    let mut inside = 0;
    for rep in 0..100u64 {
        let series = simulate_series(&truth, Some(noise), &[0.0, 365.0], rep).unwrap();
        let hmc = HmcConfig {
            seed: rep,
            ..HmcConfig::default()
        };
        let post = fit_gompertz_bayesian(&series, &energy, &hmc).unwrap();
        let hit = [truth.alpha(), truth.beta(), truth.y0()].iter().enumerate().all(|(k, v)| {
            let (lo, hi) = central_interval(&post.column(k), 0.95).unwrap();
            lo <= *v && *v <= hi
        });
        inside += hit as usize;
    }
    assert!(inside >= 90, "{inside} of 100");
}

#[test]
fn within_patient_rate_correlation_is_positive() {
    let cfg = CohortConfig::default();
    let cohort = simulate_cohort(40, &cfg, 11).unwrap();
    let energy = EnergyConfig::default();
    let mut pooled = Vec::new();
    for (i, p) in cohort.iter().enumerate() {
        let (train, _) = p.series.holdout_split(2).unwrap();
        let hmc = HmcConfig {
            seed: patient_seed(11, i),
            ..HmcConfig::default()
        };
        let post = fit_gompertz_bayesian(&train, &energy, &hmc).unwrap();
        let std = |v: Vec<f64>| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let s = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt();
            v.into_iter().map(move |x| if s > 0.0 { (x - m) / s } else { 0.0 })
        };
        pooled.extend(std(post.column(0)).zip(std(post.column(1))));
    }
    let corr = pooled.iter().map(|(a, b)| a * b).sum::<f64>() / pooled.len() as f64;
    assert!(corr > 0.0, "pooled within-patient correlation {corr}");
}

#[test]
fn gompertz_bayesian_synthetic_coverage() {
    let cohort = simulate_cohort(60, &CohortConfig::default(), 5).unwrap();
    let cfg = PipelineConfig::default();
    let mut cov = 0.0;
    for (i, p) in cohort.iter().enumerate() {
        let out = evaluate_patient(&p.series, &[Method::GompertzBayesian], &cfg, patient_seed(5, i)).unwrap();
        cov += out[0].result.as_ref().unwrap().1.coverage95.unwrap();
    }
    let cov = cov / cohort.len() as f64;
    assert!(cov >= 0.88, "coverage {cov}");
}

#[test]
fn gompertz_beats_gp_on_noiseless_data() {
    let cfg = CohortConfig {
        sigma_v: 0.0,
        visit_days: vec![0.0, 20.0, 45.0, 90.0],
        jitter_days: 5.0,
        ..CohortConfig::default()
    };
    let energy = EnergyConfig::default();
    let (mut sq_gomp, mut sq_gp) = (0.0, 0.0);
    for p in simulate_cohort(30, &cfg, 2).unwrap() {
        let (train, test) = p.series.holdout_split(3).unwrap();
        let t = test.times()[0];
        let obs = test.log_volumes()[0];
        let g = fit_pure_gompertz(&train, &energy).unwrap();
        sq_gomp += (g.params.closed_form_log(t) - obs).powi(2);
        sq_gp += (fit_pure_gp(&train).unwrap().predict(t).0 - obs).powi(2);
    }
    let (rmse_gomp, rmse_gp) = ((sq_gomp / 30.0).sqrt(), (sq_gp / 30.0).sqrt());
    assert!(rmse_gomp < 1e-6, "{rmse_gomp}");
    assert!(rmse_gomp < rmse_gp);
}

#[test]
fn pure_pinn_interpolates_training_points() {
    let truth = GompertzParams::new(0.2, 0.05, 5.0, 0.0).unwrap();
    let series: LongitudinalSeries = simulate_series(&truth, None, &[0.0, 30.0, 365.0], 0).unwrap();
    let fit = fit_pure_pinn(&series, &EnergyConfig::default(), &MapConfig::default()).unwrap();
    for (t, y) in series.times().iter().zip(series.log_volumes()) {
        assert!((fit.predict(*t) - y).abs() < 0.05, "t={t}: {} vs {y}", fit.predict(*t));
    }
}
