//! Hamiltonian Monte Carlo with an identity mass matrix.
//!
//! The sampler is generic over a [`Potential`]; the kinetic model samples
//! `xi = (log alpha, log beta, y0)` (optionally with `log sigma_v` as a fourth
//! coordinate) against the closed-form Gompertz trajectory.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyConfig;
use crate::error::{Error, Result};
use crate::map::MapResult;
use crate::math::{exp, log, sqrt};
use crate::prior::Normal;
use crate::rng::{seeded, standard_normal, stream};
use crate::series::LongitudinalSeries;

/// Potential energy `U(x)` with its gradient.
pub trait Potential {
    fn dim(&self) -> usize;

    /// Returns `U(x)` and writes `grad U(x)` into `grad`. Non-finite values
    /// mark a diverged state.
    fn energy_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HmcConfig {
    pub step_size: f64,
    pub leapfrog_steps: usize,
    /// Total iterations, burn-in included.
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Sd of the Gaussian prior on `y0`, centered at the first observed log-volume.
    pub y0_prior_sd: f64,
    /// Sample `log sigma_v` under a half-normal prior instead of fixing `sigma_v = sigma_d`.
    pub sample_sigma_v: bool,
    pub sigma_v_prior_scale: f64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            leapfrog_steps: 20,
            n_samples: 400,
            burn_in: 100,
            seed: 42,
            y0_prior_sd: 1.0,
            sample_sigma_v: false,
            sigma_v_prior_scale: 0.5,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::arg("step_size must be positive"));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::arg("leapfrog_steps must be at least 1"));
        }
        if self.burn_in >= self.n_samples {
            return Err(Error::arg("burn_in must be smaller than n_samples"));
        }
        if !(self.y0_prior_sd > 0.0) || !(self.sigma_v_prior_scale > 0.0) {
            return Err(Error::arg("prior scales must be positive"));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.n_samples - self.burn_in
    }
}

/// Kick-drift-kick leapfrog, updating `position` and `momentum` in place.
/// Returns the potential at the final position.
pub fn leapfrog<P: Potential + ?Sized>(
    potential: &mut P,
    position: &mut [f64],
    momentum: &mut [f64],
    step_size: f64,
    n_steps: usize,
) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::arg("leapfrog needs at least one step"));
    }
    let mut grad = vec![0.0; potential.dim()];
    let u = potential.energy_grad(position, &mut grad);
    if !u.is_finite() {
        return Err(Error::DivergedState);
    }
    leapfrog_from(potential, position, momentum, &mut grad, step_size, n_steps)
}

/// Leapfrog starting from a known gradient; `grad` holds the final gradient.
fn leapfrog_from<P: Potential + ?Sized>(
    potential: &mut P,
    position: &mut [f64],
    momentum: &mut [f64],
    grad: &mut [f64],
    step_size: f64,
    n_steps: usize,
) -> Result<f64> {
    let mut u = f64::NAN;
    for _ in 0..n_steps {
        for (p, g) in momentum.iter_mut().zip(grad.iter()) {
            *p -= 0.5 * step_size * g;
        }
        for (x, p) in position.iter_mut().zip(momentum.iter()) {
            *x += step_size * p;
        }
        u = potential.energy_grad(position, grad);
        if !u.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedState);
        }
        for (p, g) in momentum.iter_mut().zip(grad.iter()) {
            *p -= 0.5 * step_size * g;
        }
    }
    Ok(u)
}

fn kinetic_energy(momentum: &[f64]) -> f64 {
    0.5 * momentum.iter().map(|p| p * p).sum::<f64>()
}

/// Output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub dim: usize,
    /// Retained states, row-major `(n_samples - burn_in) x dim`.
    pub draws: Vec<f64>,
    /// Accepted proposals over all iterations, burn-in included.
    pub accepted: usize,
    pub iterations: usize,
    /// Trajectories rejected because the integrator diverged.
    pub divergences: usize,
    /// Potential of the chain state after every iteration.
    pub energy_trace: Vec<f64>,
}

impl Chain {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.iterations as f64
    }

    pub fn n_draws(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }
}

/// Metropolis-corrected HMC chain from `init`. The correction is applied on
/// every iteration, burn-in included; diverged trajectories are rejected.
pub fn run_chain<P: Potential + ?Sized>(potential: &mut P, init: &[f64], config: &HmcConfig) -> Result<Chain> {
    config.validate()?;
    let dim = potential.dim();
    if init.len() != dim {
        return Err(Error::arg("initial state has the wrong dimension"));
    }
    let mut rng = seeded(config.seed, stream::HMC);
    let mut x = init.to_vec();
    let mut grad = vec![0.0; dim];
    let mut u = potential.energy_grad(&x, &mut grad);
    if !u.is_finite() {
        return Err(Error::DivergedState);
    }
    let mut proposal = vec![0.0; dim];
    let mut momentum = vec![0.0; dim];
    let mut proposal_grad = vec![0.0; dim];
    let mut chain = Chain {
        dim,
        draws: Vec::with_capacity(config.retained() * dim),
        accepted: 0,
        iterations: config.n_samples,
        divergences: 0,
        energy_trace: Vec::with_capacity(config.n_samples),
    };
    for iter in 0..config.n_samples {
        for p in momentum.iter_mut() {
            *p = standard_normal(&mut rng);
        }
        let h0 = u + kinetic_energy(&momentum);
        proposal.copy_from_slice(&x);
        proposal_grad.copy_from_slice(&grad);
        let outcome = leapfrog_from(
            potential,
            &mut proposal,
            &mut momentum,
            &mut proposal_grad,
            config.step_size,
            config.leapfrog_steps,
        );
        let log_u: f64 = log(rng.random::<f64>());
        match outcome {
            Ok(u_new) => {
                let h1 = u_new + kinetic_energy(&momentum);
                if h1.is_finite() && log_u < h0 - h1 {
                    core::mem::swap(&mut x, &mut proposal);
                    core::mem::swap(&mut grad, &mut proposal_grad);
                    u = u_new;
                    chain.accepted += 1;
                }
            }
            Err(_) => chain.divergences += 1,
        }
        chain.energy_trace.push(u);
        if iter >= config.burn_in {
            chain.draws.extend_from_slice(&x);
        }
    }
    Ok(chain)
}

/// `U(x) = |x|^2 / 2`, the standard Gaussian.
#[derive(Debug, Clone, Copy)]
pub struct StandardGaussian {
    pub dim: usize,
}

impl Potential for StandardGaussian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn energy_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(x);
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Closed-form trajectory `y(t)` and its partials with respect to
/// `(log alpha, log beta, y0)`.
pub fn closed_form_with_partials(log_alpha: f64, log_beta: f64, y0: f64, tau: f64) -> (f64, [f64; 3]) {
    let alpha = exp(log_alpha);
    let beta = exp(log_beta);
    let k = alpha / beta;
    let decay = exp(-beta * tau);
    let y = k + (y0 - k) * decay;
    let d_log_alpha = k * (1.0 - decay);
    let d_log_beta = -k * (1.0 - decay) - (y0 - k) * beta * tau * decay;
    (y, [d_log_alpha, d_log_beta, decay])
}

/// Negative log posterior over `xi = (log alpha, log beta, y0[, log sigma_v])`.
///
/// The log-normal rate priors are Gaussians in `xi`, which absorbs the
/// Jacobian of the log map.
#[derive(Debug, Clone)]
pub struct KineticPotential {
    taus: Vec<f64>,
    observed: Vec<f64>,
    sigma_v: f64,
    log_alpha_prior: Normal,
    log_beta_prior: Normal,
    y0_prior: Normal,
    /// Half-normal scale when `log sigma_v` is sampled.
    sigma_v_scale: Option<f64>,
}

impl KineticPotential {
    pub fn new(training: &LongitudinalSeries, energy: &EnergyConfig, hmc: &HmcConfig) -> Result<Self> {
        if training.is_empty() {
            return Err(Error::arg("training slice is empty"));
        }
        energy.validate()?;
        let t0 = training.first_time();
        Ok(Self {
            taus: training.times().iter().map(|t| t - t0).collect(),
            observed: training.log_volumes().to_vec(),
            sigma_v: energy.sigma_d,
            log_alpha_prior: energy.prior_alpha.log_space(),
            log_beta_prior: energy.prior_beta.log_space(),
            y0_prior: Normal::new(training.log_volumes()[0], hmc.y0_prior_sd)?,
            sigma_v_scale: hmc.sample_sigma_v.then_some(hmc.sigma_v_prior_scale),
        })
    }

    /// A potential with no observations: priors only.
    pub fn prior_only(energy: &EnergyConfig, y0_prior: Normal) -> Self {
        Self {
            taus: Vec::new(),
            observed: Vec::new(),
            sigma_v: energy.sigma_d,
            log_alpha_prior: energy.prior_alpha.log_space(),
            log_beta_prior: energy.prior_beta.log_space(),
            y0_prior,
            sigma_v_scale: None,
        }
    }

    /// Potential and gradient, or [`Error::DivergedState`] when non-finite.
    pub fn potential(&mut self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.dim()];
        let u = self.energy_grad(xi, &mut grad);
        if !u.is_finite() {
            return Err(Error::DivergedState);
        }
        Ok((u, grad))
    }
}

impl Potential for KineticPotential {
    fn dim(&self) -> usize {
        if self.sigma_v_scale.is_some() {
            4
        } else {
            3
        }
    }

    fn energy_grad(&mut self, xi: &[f64], grad: &mut [f64]) -> f64 {
        let (sigma, log_sigma) = match self.sigma_v_scale {
            Some(_) => (exp(xi[3]), xi[3]),
            None => (self.sigma_v, 0.0),
        };
        let inv_var = 1.0 / (sigma * sigma);
        let mut sq = 0.0;
        let mut g = [0.0; 3];
        for (tau, obs) in self.taus.iter().zip(&self.observed) {
            let (y, dy) = closed_form_with_partials(xi[0], xi[1], xi[2], *tau);
            let r = obs - y;
            sq += r * r;
            for k in 0..3 {
                g[k] -= r * inv_var * dy[k];
            }
        }
        let mut u = 0.5 * sq * inv_var
            + self.log_alpha_prior.energy(xi[0])
            + self.log_beta_prior.energy(xi[1])
            + self.y0_prior.energy(xi[2]);
        grad[0] = g[0] + self.log_alpha_prior.energy_grad(xi[0]);
        grad[1] = g[1] + self.log_beta_prior.energy_grad(xi[1]);
        grad[2] = g[2] + self.y0_prior.energy_grad(xi[2]);
        if let Some(scale) = self.sigma_v_scale {
            // Likelihood normalizer n*log(sigma), half-normal prior on sigma,
            // and the log-map Jacobian -log(sigma).
            let n = self.taus.len() as f64;
            u += n * log_sigma + sigma * sigma / (2.0 * scale * scale) - log_sigma;
            grad[3] = n - sq * inv_var + sigma * sigma / (scale * scale) - 1.0;
        }
        u
    }
}

/// One posterior draw in constrained space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticDraw {
    pub alpha: f64,
    pub beta: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub t0: f64,
    pub draws: Vec<KineticDraw>,
    /// Per-draw noise sd when it was sampled.
    pub sigma_v: Option<Vec<f64>>,
    pub acceptance_rate: f64,
    pub energy_trace: Vec<f64>,
    /// No proposal was accepted over the whole chain.
    pub degenerate_chain: bool,
}

impl PosteriorSamples {
    pub fn from_chain(chain: &Chain, t0: f64) -> Self {
        let draws = (0..chain.n_draws())
            .map(|i| {
                let d = chain.draw(i);
                KineticDraw {
                    alpha: exp(d[0]),
                    beta: exp(d[1]),
                    y0: d[2],
                }
            })
            .collect();
        let sigma_v = (chain.dim == 4).then(|| (0..chain.n_draws()).map(|i| exp(chain.draw(i)[3])).collect());
        Self {
            t0,
            draws,
            sigma_v,
            acceptance_rate: chain.acceptance_rate(),
            energy_trace: chain.energy_trace.clone(),
            degenerate_chain: chain.accepted == 0,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws
            .iter()
            .map(|d| match k {
                0 => d.alpha,
                1 => d.beta,
                _ => d.y0,
            })
            .collect()
    }
}

/// HMC over the kinetic coordinates starting from `(alpha, beta, y0)`.
pub fn sample_kinetics(
    training: &LongitudinalSeries,
    init: (f64, f64, f64),
    energy: &EnergyConfig,
    hmc: &HmcConfig,
) -> Result<PosteriorSamples> {
    let (alpha, beta, y0) = init;
    if !(alpha > 0.0 && beta > 0.0 && y0.is_finite()) {
        return Err(Error::arg("initial kinetics must be positive and finite"));
    }
    let mut potential = KineticPotential::new(training, energy, hmc)?;
    let mut start = vec![log(alpha), log(beta), y0];
    if hmc.sample_sigma_v {
        start.push(log(energy.sigma_d));
    }
    let chain = run_chain(&mut potential, &start, hmc)?;
    Ok(PosteriorSamples::from_chain(&chain, training.first_time()))
}

/// HMC initialized at the MAP point `(log alpha_hat, log beta_hat, y0_hat)`.
pub fn sample_posterior(
    training: &LongitudinalSeries,
    map: &MapResult,
    hmc: &HmcConfig,
    energy: &EnergyConfig,
) -> Result<PosteriorSamples> {
    if !map.final_energy.is_finite() || !map.y0_hat.is_finite() {
        return Err(Error::arg("MAP result is not finite"));
    }
    sample_kinetics(training, (map.alpha_hat, map.beta_hat, map.y0_hat), energy, hmc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub acceptance_rate: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// `None` where a coordinate never moved.
    pub lag1_autocorrelation: Vec<Option<f64>>,
    pub degenerate: bool,
}

/// Summary of per-coordinate draws.
pub fn diagnostics_from_columns(columns: &[Vec<f64>], acceptance_rate: f64) -> Result<ChainDiagnostics> {
    if columns.iter().any(|c| c.len() < 2) || columns.is_empty() {
        return Err(Error::arg("diagnostics need at least two retained samples"));
    }
    let mut out = ChainDiagnostics {
        acceptance_rate,
        mean: Vec::new(),
        sd: Vec::new(),
        lag1_autocorrelation: Vec::new(),
        degenerate: false,
    };
    for col in columns {
        let m = crate::math::mean(col);
        let denom: f64 = col.iter().map(|x| (x - m) * (x - m)).sum();
        out.mean.push(m);
        out.sd.push(sqrt(denom / (col.len() as f64 - 1.0)));
        if denom > 0.0 {
            let num: f64 = col.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
            out.lag1_autocorrelation.push(Some(num / denom));
        } else {
            out.lag1_autocorrelation.push(None);
            out.degenerate = true;
        }
    }
    Ok(out)
}

pub fn chain_diagnostics(samples: &PosteriorSamples) -> Result<ChainDiagnostics> {
    let columns = [samples.column(0), samples.column(1), samples.column(2)];
    diagnostics_from_columns(&columns, samples.acceptance_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::default_alpha_prior;

    fn two_point() -> LongitudinalSeries {
        LongitudinalSeries::new("p", vec![0.0, 300.0], vec![150.0, 60.0]).unwrap()
    }

    #[test]
    fn harmonic_energy_is_conserved() {
        let mut g = StandardGaussian { dim: 3 };
        let mut x = [0.3, -1.2, 0.8];
        let mut p = [1.0, 0.5, -0.7];
        let h0 = 0.5 * (x.iter().map(|v| v * v).sum::<f64>() + p.iter().map(|v| v * v).sum::<f64>());
        let u = leapfrog(&mut g, &mut x, &mut p, 1e-4, 10).unwrap();
        let h1 = u + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        assert!((h1 - h0).abs() < 1e-7);
    }

    #[test]
    fn leapfrog_is_reversible() {
        let mut pot = KineticPotential::new(&two_point(), &EnergyConfig::default(), &HmcConfig::default()).unwrap();
        let start = [log(0.2), log(0.05), 5.0];
        let mut x = start;
        let mut p = [0.4, -0.3, 0.9];
        leapfrog(&mut pot, &mut x, &mut p, 0.01, 20).unwrap();
        for v in p.iter_mut() {
            *v = -*v;
        }
        leapfrog(&mut pot, &mut x, &mut p, 0.01, 20).unwrap();
        for (a, b) in x.iter().zip(start) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_start_stays_put() {
        let mut g = StandardGaussian { dim: 2 };
        let mut x = [0.0, 0.0];
        let mut p = [0.0, 0.0];
        leapfrog(&mut g, &mut x, &mut p, 0.1, 5).unwrap();
        assert_eq!(x, [0.0, 0.0]);
        assert!(leapfrog(&mut g, &mut x, &mut p, 0.1, 0).is_err());
    }

    #[test]
    fn potential_gradient_matches_finite_differences() {
        let series = LongitudinalSeries::new("p", vec![0.0, 40.0, 300.0], vec![20.0, 70.0, 60.0]).unwrap();
        for sample_sigma in [false, true] {
            let hmc = HmcConfig {
                sample_sigma_v: sample_sigma,
                ..HmcConfig::default()
            };
            let mut pot = KineticPotential::new(&series, &EnergyConfig::default(), &hmc).unwrap();
            let mut s = 1u64;
            for _ in 0..50 {
                let mut xi = vec![0.0; pot.dim()];
                for v in xi.iter_mut() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    *v = ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
                }
                xi[0] += log(0.2);
                xi[1] += log(0.05);
                xi[2] += 4.0;
                if sample_sigma {
                    xi[3] = log(0.2) + 0.5 * xi[3];
                }
                let (_, grad) = pot.potential(&xi).unwrap();
                for k in 0..xi.len() {
                    let h = 1e-6;
                    let mut up = xi.clone();
                    up[k] += h;
                    let mut down = xi.clone();
                    down[k] -= h;
                    let fd = (pot.potential(&up).unwrap().0 - pot.potential(&down).unwrap().0) / (2.0 * h);
                    assert!((fd - grad[k]).abs() <= 1e-6 * fd.abs().max(1.0), "k={k}: {fd} vs {}", grad[k]);
                }
            }
        }
    }

    #[test]
    fn exact_data_has_zero_likelihood_term() {
        let (la, lb, y0) = (log(0.3), log(0.04), 3.0);
        let times = [0.0, 25.0, 90.0];
        let volumes: Vec<f64> = times.iter().map(|&t| exp(closed_form_with_partials(la, lb, y0, t).0)).collect();
        let series = LongitudinalSeries::new("p", times.to_vec(), volumes).unwrap();
        let energy = EnergyConfig::default();
        let hmc = HmcConfig::default();
        let mut with_data = KineticPotential::new(&series, &energy, &hmc).unwrap();
        let mut priors = KineticPotential::prior_only(&energy, Normal::new(series.log_volumes()[0], 1.0).unwrap());
        let xi = [la, lb, y0];
        let diff = with_data.potential(&xi).unwrap().0 - priors.potential(&xi).unwrap().0;
        assert!(diff.abs() < 1e-20);
    }

    #[test]
    fn prior_only_mode() {
        let energy = EnergyConfig::default();
        let mut pot = KineticPotential::prior_only(&energy, Normal::new(4.5, 1.0).unwrap());
        let (_, grad) = pot.potential(&[log(0.2), log(0.05), 4.5]).unwrap();
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
        assert_eq!(default_alpha_prior().mu, log(0.2));
    }

    #[test]
    fn chains_are_deterministic() {
        let cfg = HmcConfig::default();
        let a = sample_kinetics(&two_point(), (0.2, 0.05, 5.0), &EnergyConfig::default(), &cfg).unwrap();
        let b = sample_kinetics(&two_point(), (0.2, 0.05, 5.0), &EnergyConfig::default(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 300);
        assert!(a.draws.iter().all(|d| d.alpha > 0.0 && d.beta > 0.0));
        assert!(a.acceptance_rate > 0.0 && a.acceptance_rate <= 1.0);
    }

    #[test]
    fn gaussian_hook_moments() {
        let cfg = HmcConfig {
            step_size: 0.1,
            leapfrog_steps: 15,
            n_samples: 3100,
            burn_in: 100,
            seed: 3,
            ..HmcConfig::default()
        };
        let chain = run_chain(&mut StandardGaussian { dim: 3 }, &[0.5, -0.5, 1.0], &cfg).unwrap();
        assert_eq!(chain.n_draws(), 3000);
        for k in 0..3 {
            let col: Vec<f64> = (0..3000).map(|i| chain.draw(i)[k]).collect();
            let m = crate::math::mean(&col);
            let v = crate::math::variance(&col);
            assert!(m.abs() < 0.15, "mean {m}");
            assert!((v - 1.0).abs() < 0.25, "var {v}");
        }
    }

    #[test]
    fn flat_potential_accepts_everything() {
        struct Flat;
        impl Potential for Flat {
            fn dim(&self) -> usize {
                2
            }
            fn energy_grad(&mut self, _: &[f64], grad: &mut [f64]) -> f64 {
                grad.fill(0.0);
                0.0
            }
        }
        let chain = run_chain(&mut Flat, &[0.0, 0.0], &HmcConfig::default()).unwrap();
        assert_eq!(chain.acceptance_rate(), 1.0);
    }

    #[test]
    fn diagnostics_flag_constant_chains() {
        let d = diagnostics_from_columns(&[vec![1.0; 10], vec![0.0, 1.0, 0.5]], 0.0).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.lag1_autocorrelation[0], None);
        assert!(diagnostics_from_columns(&[vec![1.0]], 1.0).is_err());
    }

    #[test]
    fn iid_draws_have_small_autocorrelation() {
        let mut rng = seeded(8, 0);
        let col: Vec<f64> = (0..1000).map(|_| standard_normal(&mut rng)).collect();
        let d = diagnostics_from_columns(&[col], 1.0).unwrap();
        assert!(d.lag1_autocorrelation[0].unwrap().abs() < 0.1);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = HmcConfig {
            burn_in: 400,
            ..HmcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HmcConfig {
            leapfrog_steps: 0,
            ..HmcConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
