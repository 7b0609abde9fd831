//! Gaussian-process baselines over raw time (days) with log-volume outputs.
//!
//! Squared-exponential kernel `s^2 exp(-(t - t')^2 / (2 l^2))` plus white noise,
//! constant prior mean equal to the training mean.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmc::{run_chain, HmcConfig, Potential};
use crate::linalg::Cholesky;
use crate::math::{exp, log, sqrt};
use crate::predictive::Trajectories;
use crate::rng::{seeded, standard_normal, stream};
use crate::series::LongitudinalSeries;

pub const JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-4;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Box for the optimizer, `[lower, upper]` per log hyperparameter.
const BOUNDS: [(f64, f64); 3] = [
    (-9.210_340_371_976_182, 4.605_170_185_988_092), // signal variance 1e-4 ..= 1e2
    (0.0, 9.210_340_371_976_182),                    // length scale 1 ..= 1e4 days
    (-13.815_510_557_964_274, 0.0),                  // noise variance 1e-6 ..= 1
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub log_signal_var: f64,
    pub log_length_scale: f64,
    pub log_noise_var: f64,
}

impl GpHyper {
    pub fn to_array(self) -> [f64; 3] {
        [self.log_signal_var, self.log_length_scale, self.log_noise_var]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            log_signal_var: x[0],
            log_length_scale: x[1],
            log_noise_var: x[2],
        }
    }

    fn kernel(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        exp(self.log_signal_var - d * d * 0.5 * exp(-2.0 * self.log_length_scale))
    }
}

/// Kernel matrix with noise and the smallest jitter that factors, escalating
/// by decades from [`JITTER`] to [`MAX_JITTER`].
fn factor(times: &[f64], hyper: &GpHyper) -> Result<(Vec<f64>, Cholesky)> {
    let n = times.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            k[i * n + j] = hyper.kernel(times[i], times[j]);
        }
    }
    let noise = exp(hyper.log_noise_var);
    let mut jitter = JITTER;
    loop {
        let mut a = k.clone();
        for i in 0..n {
            a[i * n + i] += noise + jitter;
        }
        if let Some(c) = Cholesky::factor(&a, n) {
            return Ok((k, c));
        }
        jitter *= 10.0;
        if jitter > MAX_JITTER * (1.0 + 1e-9) {
            return Err(Error::FitFailure("kernel matrix not positive definite".into()));
        }
    }
}

/// Log marginal likelihood of centered targets and its gradient in log hyperparameters.
pub fn log_marginal_likelihood(times: &[f64], centered: &[f64], hyper: &GpHyper) -> Result<(f64, [f64; 3])> {
    let n = times.len();
    if n == 0 || centered.len() != n {
        return Err(Error::arg("GP needs matching nonempty inputs"));
    }
    let (kf, chol) = factor(times, hyper)?;
    let alpha = chol.solve(centered);
    let fit: f64 = alpha.iter().zip(centered).map(|(a, y)| a * y).sum();
    let lml = -0.5 * fit - 0.5 * chol.log_det() - 0.5 * n as f64 * LN_2PI;
    let inv = chol.inverse();
    let inv_l2 = exp(-2.0 * hyper.log_length_scale);
    let noise = exp(hyper.log_noise_var);
    let mut grad = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - inv[i * n + j];
            let d = times[i] - times[j];
            grad[0] += w * kf[i * n + j];
            grad[1] += w * kf[i * n + j] * d * d * inv_l2;
        }
        grad[2] += (alpha[i] * alpha[i] - inv[i * n + i]) * noise;
    }
    for g in grad.iter_mut() {
        *g *= 0.5;
    }
    Ok((lml, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    pub hyper: GpHyper,
    pub mean: f64,
    times: Vec<f64>,
    alpha: Vec<f64>,
    chol: Cholesky,
}

impl GpModel {
    pub fn fit(times: &[f64], targets: &[f64], hyper: GpHyper) -> Result<Self> {
        if times.is_empty() || times.len() != targets.len() {
            return Err(Error::arg("GP needs matching nonempty inputs"));
        }
        let mean = crate::math::mean(targets);
        let centered: Vec<f64> = targets.iter().map(|y| y - mean).collect();
        let (_, chol) = factor(times, &hyper)?;
        let alpha = chol.solve(&centered);
        Ok(Self {
            hyper,
            mean,
            times: times.to_vec(),
            alpha,
            chol,
        })
    }

    /// Latent posterior mean and variance at `t`.
    pub fn predict(&self, t: f64) -> (f64, f64) {
        let ks: Vec<f64> = self.times.iter().map(|&s| self.hyper.kernel(t, s)).collect();
        let mean = self.mean + ks.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        let v = self.chol.solve_lower(&ks);
        let var = exp(self.hyper.log_signal_var) - v.iter().map(|x| x * x).sum::<f64>();
        (mean, var.max(0.0))
    }

    pub fn noise_var(&self) -> f64 {
        exp(self.hyper.log_noise_var)
    }
}

fn clamp_to_bounds(x: &mut [f64; 3]) {
    for (v, (lo, hi)) in x.iter_mut().zip(BOUNDS) {
        *v = v.clamp(lo, hi);
    }
}

/// Projected gradient ascent with step halving from one start.
fn ascend(times: &[f64], centered: &[f64], start: [f64; 3]) -> Option<([f64; 3], f64)> {
    let mut x = start;
    clamp_to_bounds(&mut x);
    let (mut f, mut g) = log_marginal_likelihood(times, centered, &GpHyper::from_slice(&x)).ok()?;
    let mut step = 0.1;
    for _ in 0..500 {
        let mut improved = false;
        for _ in 0..40 {
            let mut y = [x[0] + step * g[0], x[1] + step * g[1], x[2] + step * g[2]];
            clamp_to_bounds(&mut y);
            if let Ok((fy, gy)) = log_marginal_likelihood(times, centered, &GpHyper::from_slice(&y)) {
                if fy > f {
                    let gain = fy - f;
                    x = y;
                    f = fy;
                    g = gy;
                    step *= 2.0;
                    improved = gain > 1e-12;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some((x, f))
}

/// Marginal-likelihood fit from several starts within the hyperparameter box.
pub fn fit_pure_gp(training: &LongitudinalSeries) -> Result<GpModel> {
    if training.len() < 2 {
        return Err(Error::UnfitSeries {
            needed: 2,
            got: training.len(),
        });
    }
    let times = training.times();
    let y = training.log_volumes();
    let mean = crate::math::mean(y);
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let spread = centered.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    let span = (training.last_time() - training.first_time()).max(1.0);
    let mut best: Option<([f64; 3], f64)> = None;
    for length in [0.5 * span, span, 2.0 * span] {
        for noise in [0.04, 0.004] {
            let start = [log(spread.max(1e-2)), log(length), log(noise)];
            if let Some((x, f)) = ascend(times, &centered, start) {
                if best.is_none_or(|(_, bf)| f > bf) {
                    best = Some((x, f));
                }
            }
        }
    }
    let (x, _) = best.ok_or_else(|| Error::FitFailure("no GP start converged".into()))?;
    GpModel::fit(times, y, GpHyper::from_slice(&x))
}

/// Negative log posterior over log hyperparameters with Gaussian priors.
struct HyperPotential<'a> {
    times: &'a [f64],
    centered: &'a [f64],
    prior_mean: [f64; 3],
    prior_sd: f64,
}

impl Potential for HyperPotential<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn energy_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        match log_marginal_likelihood(self.times, self.centered, &GpHyper::from_slice(x)) {
            Ok((lml, g)) => {
                let mut u = -lml;
                for k in 0..3 {
                    let z = (x[k] - self.prior_mean[k]) / self.prior_sd;
                    u += 0.5 * z * z;
                    grad[k] = -g[k] + z / self.prior_sd;
                }
                u
            }
            Err(_) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpPosterior {
    pub models: Vec<GpModel>,
    pub acceptance_rate: f64,
}

impl GpPosterior {
    /// One function value per hyperparameter draw and time, from that draw's
    /// predictive marginal; `with_noise` adds the draw's noise variance.
    pub fn trajectories(&self, times: &[f64], with_noise: bool, seed: u64) -> Result<Trajectories> {
        crate::predictive::check_ascending(times)?;
        let mut rng = seeded(seed, stream::GP);
        let mut values = Vec::with_capacity(self.models.len() * times.len());
        for m in &self.models {
            for &t in times {
                let (mu, mut var) = m.predict(t);
                if with_noise {
                    var += m.noise_var();
                }
                values.push(mu + sqrt(var) * standard_normal(&mut rng));
            }
        }
        Trajectories::new(times.to_vec(), self.models.len(), values)
    }
}

/// HMC over log hyperparameters, priors `N(pure-GP optimum, prior_sd^2)`.
pub fn fit_bayesian_gp(training: &LongitudinalSeries, hmc: &HmcConfig, prior_sd: f64) -> Result<GpPosterior> {
    if !(prior_sd > 0.0) {
        return Err(Error::arg("prior_sd must be positive"));
    }
    let pure = fit_pure_gp(training)?;
    let y = training.log_volumes();
    let centered: Vec<f64> = y.iter().map(|v| v - pure.mean).collect();
    let start = pure.hyper.to_array();
    let mut potential = HyperPotential {
        times: training.times(),
        centered: &centered,
        prior_mean: start,
        prior_sd,
    };
    let chain = run_chain(&mut potential, &start, hmc)?;
    let models = (0..chain.n_draws())
        .map(|i| GpModel::fit(training.times(), y, GpHyper::from_slice(chain.draw(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(GpPosterior {
        models,
        acceptance_rate: chain.acceptance_rate(),
    })
}
