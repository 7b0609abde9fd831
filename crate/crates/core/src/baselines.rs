//! Comparison methods: pure Gompertz least squares, Gompertz with HMC,
//! a prior-free PINN, and full-weight HMC over the PINN.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::energy::{EnergyConfig, EnergyProblem};
use crate::error::{Error, Result};
use crate::gompertz::GompertzParams;
use crate::hmc::{closed_form_with_partials, run_chain, sample_kinetics, Chain, HmcConfig, Potential, PosteriorSamples};
use crate::linalg::Cholesky;
use crate::map::{map_fit, MapConfig, MapResult};
use crate::math::{exp, log};
use crate::predictive::{check_ascending, Trajectories};
use crate::prior::Normal;
use crate::series::LongitudinalSeries;
use crate::surrogate::{SurrogateNetwork, TimeNormalizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GompertzFit {
    pub params: GompertzParams,
    /// Sum of squared log residuals on the training slice.
    pub residual_ss: f64,
    /// `y0` was pinned to the first observation.
    pub y0_pinned: bool,
}

fn gompertz_residuals(z: &[f64], y0_pinned: Option<f64>, taus: &[f64], obs: &[f64], jac: Option<&mut Vec<f64>>) -> f64 {
    let y0 = y0_pinned.unwrap_or_else(|| z[2]);
    let k = z.len();
    let mut ss = 0.0;
    let mut jac = jac;
    if let Some(j) = jac.as_deref_mut() {
        j.clear();
    }
    for (tau, o) in taus.iter().zip(obs) {
        let (y, dy) = closed_form_with_partials(z[0], z[1], y0, *tau);
        let r = o - y;
        ss += r * r;
        if let Some(j) = jac.as_deref_mut() {
            j.push(r);
            j.extend_from_slice(&dy[..k]);
        }
    }
    ss
}

/// Levenberg-damped Gauss-Newton from one start. Returns `(z, ss)`.
fn levenberg(start: &[f64], y0_pinned: Option<f64>, taus: &[f64], obs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = start.len();
    let mut z = start.to_vec();
    let mut rows = Vec::new();
    let mut ss = gompertz_residuals(&z, y0_pinned, taus, obs, Some(&mut rows));
    if !ss.is_finite() {
        return Ok((z, f64::INFINITY));
    }
    let mut lambda = 1e-3;
    for _ in 0..500 {
        if ss < 1e-28 {
            break;
        }
        let mut jtj = vec![0.0; k * k];
        let mut jtr = vec![0.0; k];
        for row in rows.chunks(k + 1) {
            let (r, j) = (row[0], &row[1..]);
            for a in 0..k {
                jtr[a] += j[a] * r;
                for b in 0..k {
                    jtj[a * k + b] += j[a] * j[b];
                }
            }
        }
        let mut stepped = false;
        while lambda <= 1e12 {
            let mut damped = jtj.clone();
            for a in 0..k {
                damped[a * k + a] += lambda;
            }
            let chol = Cholesky::factor(&damped, k)
                .ok_or_else(|| Error::FitFailure("singular normal equations".into()))?;
            let delta = chol.solve(&jtr);
            let trial: Vec<f64> = z.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let mut trial_rows = Vec::new();
            let trial_ss = gompertz_residuals(&trial, y0_pinned, taus, obs, Some(&mut trial_rows));
            if trial_ss.is_finite() && trial_ss < ss {
                let small = delta.iter().zip(&z).all(|(d, a)| d.abs() <= 1e-15 * (1.0 + a.abs()));
                z = trial;
                ss = trial_ss;
                rows = trial_rows;
                lambda = (lambda * 0.1).max(1e-15);
                stepped = !small;
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    Ok((z, ss))
}

/// Least-squares fit of the closed-form log trajectory. Starts at the prior
/// medians and at the 8 neighbours obtained by scaling each rate by
/// `exp(-0.5)`, `1` or `exp(0.5)`. With fewer than three observations `y0`
/// is pinned to the first observed log-volume.
pub fn fit_pure_gompertz(training: &LongitudinalSeries, energy: &EnergyConfig) -> Result<GompertzFit> {
    if training.len() < 2 {
        return Err(Error::UnfitSeries {
            needed: 2,
            got: training.len(),
        });
    }
    let t0 = training.first_time();
    let taus: Vec<f64> = training.times().iter().map(|t| t - t0).collect();
    let obs = training.log_volumes();
    let pinned = (training.len() < 3).then_some(obs[0]);
    let (la, lb) = (energy.prior_alpha.mu, energy.prior_beta.mu);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (da, db) in [(0.0, 0.0), (-0.5, -0.5), (-0.5, 0.0), (-0.5, 0.5), (0.0, -0.5), (0.0, 0.5), (0.5, -0.5), (0.5, 0.0), (0.5, 0.5)] {
        let mut start = vec![la + da, lb + db];
        if pinned.is_none() {
            start.push(obs[0]);
        }
        let (z, ss) = levenberg(&start, pinned, &taus, obs)?;
        if best.as_ref().is_none_or(|(_, b)| ss < *b) {
            best = Some((z, ss));
        }
    }
    let (z, ss) = best.expect("at least one start");
    if !ss.is_finite() {
        return Err(Error::FitFailure("no start produced a finite fit".into()));
    }
    let y0 = pinned.unwrap_or_else(|| z[2]);
    Ok(GompertzFit {
        params: GompertzParams::new(exp(z[0]), exp(z[1]), y0, t0)?,
        residual_ss: ss,
        y0_pinned: pinned.is_some(),
    })
}

/// Kinetic HMC initialized at the least-squares fit.
pub fn fit_gompertz_bayesian(training: &LongitudinalSeries, energy: &EnergyConfig, hmc: &HmcConfig) -> Result<PosteriorSamples> {
    let fit = fit_pure_gompertz(training, energy)?;
    let p = fit.params;
    sample_kinetics(training, (p.alpha(), p.beta(), p.y0()), energy, hmc)
}

/// MAP training with the prior term switched off.
pub fn fit_pure_pinn(training: &LongitudinalSeries, energy: &EnergyConfig, opt: &MapConfig) -> Result<MapResult> {
    let flat = EnergyConfig {
        prior_weight: 0.0,
        ..energy.clone()
    };
    map_fit(training, &flat, opt)
}

/// Energy over `(theta, log alpha, log beta)` with log-space Gaussian rate priors.
pub struct NetworkPotential {
    problem: EnergyProblem,
    network: SurrogateNetwork,
    log_alpha_prior: Normal,
    log_beta_prior: Normal,
}

impl NetworkPotential {
    pub fn new(training: &LongitudinalSeries, energy: &EnergyConfig, layer_sizes: &[usize]) -> Result<Self> {
        Ok(Self {
            problem: EnergyProblem::new(training, energy)?,
            network: SurrogateNetwork::zeros(layer_sizes)?,
            log_alpha_prior: energy.prior_alpha.log_space(),
            log_beta_prior: energy.prior_beta.log_space(),
        })
    }

    pub fn normalizer(&self) -> TimeNormalizer {
        *self.problem.normalizer()
    }
}

impl Potential for NetworkPotential {
    fn dim(&self) -> usize {
        self.network.n_params() + 2
    }

    fn energy_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.network.n_params();
        self.network.params_mut().copy_from_slice(&x[..p]);
        let (la, lb) = (x[p], x[p + 1]);
        let (alpha, beta) = (exp(la), exp(lb));
        let fit = self.problem.fit_terms(&self.network, alpha, beta, Some(&mut grad[..p]));
        let cfg = self.problem.config();
        let w = cfg.prior_weight;
        let inv_w = w / (cfg.sigma_w * cfg.sigma_w);
        let mut sq = 0.0;
        for (g, theta) in grad[..p].iter_mut().zip(&x[..p]) {
            *g += inv_w * theta;
            sq += theta * theta;
        }
        grad[p] = alpha * fit.d_alpha + w * self.log_alpha_prior.energy_grad(la);
        grad[p + 1] = beta * fit.d_beta + w * self.log_beta_prior.energy_grad(lb);
        fit.data
            + fit.physics
            + 0.5 * inv_w * sq
            + w * (self.log_alpha_prior.energy(la) + self.log_beta_prior.energy(lb))
    }
}

/// Full-weight posterior draws; trajectories come from the network.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnPosterior {
    pub chain: Chain,
    pub layer_sizes: Vec<usize>,
    pub normalizer: TimeNormalizer,
}

impl PinnPosterior {
    pub fn acceptance_rate(&self) -> f64 {
        self.chain.acceptance_rate()
    }

    /// Network prediction of every retained draw on `times`.
    pub fn trajectories(&self, times: &[f64]) -> Result<Trajectories> {
        check_ascending(times)?;
        let n = self.chain.n_draws();
        let p = self.chain.dim - 2;
        let mut values = Vec::with_capacity(n * times.len());
        for i in 0..n {
            let net = SurrogateNetwork::from_params(&self.layer_sizes, self.chain.draw(i)[..p].to_vec())?;
            values.extend(times.iter().map(|&t| net.forward(&self.normalizer, t)));
        }
        Trajectories::new(times.to_vec(), n, values)
    }

    /// Rate draws `(alpha, beta)`.
    pub fn rates(&self) -> Vec<(f64, f64)> {
        let p = self.chain.dim - 2;
        (0..self.chain.n_draws())
            .map(|i| {
                let d = self.chain.draw(i);
                (exp(d[p]), exp(d[p + 1]))
            })
            .collect()
    }
}

/// HMC over every network weight and the log rates, started at a MAP fit.
pub fn fit_pinn_bayesian(
    training: &LongitudinalSeries,
    map: &MapResult,
    energy: &EnergyConfig,
    hmc: &HmcConfig,
) -> Result<PinnPosterior> {
    if !map.final_energy.is_finite() {
        return Err(Error::arg("MAP result is not finite"));
    }
    let sizes = map.network.layer_sizes().to_vec();
    let mut potential = NetworkPotential::new(training, energy, &sizes)?;
    let mut start = map.network.params().to_vec();
    start.push(log(map.alpha_hat));
    start.push(log(map.beta_hat));
    let chain = run_chain(&mut potential, &start, hmc)?;
    Ok(PinnPosterior {
        chain,
        layer_sizes: sizes,
        normalizer: potential.normalizer(),
    })
}
