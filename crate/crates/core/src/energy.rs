//! Three-term energy (negative log posterior) of the surrogate and kinetics.
//!
//! ```text
//! L_data  = sum_i (y_i - y_theta(t_i))^2 / (2 sigma_d^2)
//! L_phys  = agg_j r(t_j)^2 / (2 sigma_p^2),  r = dy_theta/dt - (alpha - beta*y_theta)
//! L_prior = |theta|^2 / (2 sigma_w^2) - log p(alpha) - log p(beta)
//! ```
//! `agg` is the mean over collocation points by default (a plain sum is
//! available through [`PhysicsAggregation::Sum`]). Each term carries a
//! multiplicative weight applied after the Gaussian scaling.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::{default_alpha_prior, default_beta_prior, LogNormal};
use crate::series::LongitudinalSeries;
use crate::surrogate::{KineticReparam, SurrogateNetwork, Tape, TimeNormalizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicsAggregation {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub sigma_d: f64,
    pub sigma_p: f64,
    pub sigma_w: f64,
    pub data_weight: f64,
    pub physics_weight: f64,
    pub prior_weight: f64,
    pub n_collocation: usize,
    pub physics_aggregation: PhysicsAggregation,
    pub prior_alpha: LogNormal,
    pub prior_beta: LogNormal,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            sigma_d: 0.2,
            sigma_p: 0.5,
            sigma_w: 1.0,
            data_weight: 1.0,
            physics_weight: 1.0,
            prior_weight: 1.0,
            n_collocation: 200,
            physics_aggregation: PhysicsAggregation::Mean,
            prior_alpha: default_alpha_prior(),
            prior_beta: default_beta_prior(),
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_d", self.sigma_d), ("sigma_p", self.sigma_p), ("sigma_w", self.sigma_w)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be finite and positive")));
            }
        }
        for w in [self.data_weight, self.physics_weight, self.prior_weight] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::arg("term weights must be finite and nonnegative"));
            }
        }
        if self.n_collocation < 2 {
            return Err(Error::arg("n_collocation must be at least 2"));
        }
        self.prior_alpha.validate()?;
        self.prior_beta.validate()
    }

    fn physics_norm(&self) -> f64 {
        match self.physics_aggregation {
            PhysicsAggregation::Mean => 1.0 / self.n_collocation as f64,
            PhysicsAggregation::Sum => 1.0,
        }
    }
}

/// `n` evenly spaced points covering `[t_min, t_max]`, endpoints included.
pub fn collocation_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
        return Err(Error::arg("collocation interval is degenerate"));
    }
    if n < 2 {
        return Err(Error::arg("collocation grid needs at least two points"));
    }
    let h = (t_max - t_min) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { t_max } else { t_min + i as f64 * h })
        .collect())
}

/// Weighted data term from predictions at the observation times.
pub fn data_term(predicted: &[f64], observed: &[f64], config: &EnergyConfig) -> f64 {
    let s2 = config.sigma_d * config.sigma_d;
    let sum: f64 = predicted.iter().zip(observed).map(|(p, o)| (o - p) * (o - p)).sum();
    config.data_weight * sum / (2.0 * s2)
}

/// Weighted physics term from trajectory values and raw-time rates at the
/// collocation points.
pub fn physics_term(values: &[f64], rates: &[f64], alpha: f64, beta: f64, config: &EnergyConfig) -> f64 {
    let s2 = config.sigma_p * config.sigma_p;
    let sum: f64 = values
        .iter()
        .zip(rates)
        .map(|(y, dy)| {
            let r = dy - (alpha - beta * y);
            r * r
        })
        .sum();
    config.physics_weight * config.physics_norm() * sum / (2.0 * s2)
}

/// Weighted prior term in the constrained `(alpha, beta)` space.
pub fn prior_term(theta: &[f64], alpha: f64, beta: f64, config: &EnergyConfig) -> f64 {
    let sq: f64 = theta.iter().map(|w| w * w).sum();
    config.prior_weight
        * (sq / (2.0 * config.sigma_w * config.sigma_w)
            + config.prior_alpha.energy(alpha)
            + config.prior_beta.energy(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub data: f64,
    pub physics: f64,
    pub prior: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.data + self.physics + self.prior
    }
}

/// Likelihood-side terms plus their partials with respect to the rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitTerms {
    pub data: f64,
    pub physics: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
}

/// A training slice prepared for repeated energy evaluations.
#[derive(Debug, Clone)]
pub struct EnergyProblem {
    config: EnergyConfig,
    normalizer: TimeNormalizer,
    observed: Vec<f64>,
    /// Normalized inputs: observations first, then collocation points.
    inputs: Vec<f64>,
    n_obs: usize,
    tape: Tape,
    grad_y: Vec<f64>,
    grad_dy: Vec<f64>,
}

impl EnergyProblem {
    /// Normalizes time over the training window and lays collocation points
    /// uniformly across it. Needs at least two observations.
    pub fn new(training: &LongitudinalSeries, config: &EnergyConfig) -> Result<Self> {
        config.validate()?;
        if training.len() < 2 {
            return Err(Error::UnfitSeries {
                needed: 2,
                got: training.len(),
            });
        }
        let normalizer = TimeNormalizer::new(training.first_time(), training.last_time())?;
        let grid = collocation_grid(normalizer.t_min(), normalizer.t_max(), config.n_collocation)?;
        let inputs: Vec<f64> = training
            .times()
            .iter()
            .chain(&grid)
            .map(|&t| normalizer.normalize(t))
            .collect();
        let n = inputs.len();
        Ok(Self {
            config: config.clone(),
            normalizer,
            observed: training.log_volumes().to_vec(),
            inputs,
            n_obs: training.len(),
            tape: Tape::default(),
            grad_y: vec![0.0; n],
            grad_dy: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &EnergyConfig {
        &self.config
    }

    pub fn normalizer(&self) -> &TimeNormalizer {
        &self.normalizer
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// Collocation points in raw time.
    pub fn collocation_times(&self) -> Vec<f64> {
        let span = self.normalizer.span();
        self.inputs[self.n_obs..]
            .iter()
            .map(|x| self.normalizer.t_min() + x * span)
            .collect()
    }

    /// Data and physics terms. When `grad_theta` is given it is overwritten
    /// with their gradient with respect to the network parameters.
    pub fn fit_terms(
        &mut self,
        net: &SurrogateNetwork,
        alpha: f64,
        beta: f64,
        grad_theta: Option<&mut [f64]>,
    ) -> FitTerms {
        net.forward_batch(&self.inputs, &mut self.tape);
        let cfg = &self.config;
        let scale = self.normalizer.scale();
        let values = self.tape.values();
        let tangents = self.tape.tangents();

        let inv_d = cfg.data_weight / (cfg.sigma_d * cfg.sigma_d);
        let mut data = 0.0;
        for i in 0..self.n_obs {
            let resid = self.observed[i] - values[i];
            data += resid * resid;
            self.grad_y[i] = -inv_d * resid;
            self.grad_dy[i] = 0.0;
        }
        data *= 0.5 * inv_d;

        let inv_p = cfg.physics_weight * cfg.physics_norm() / (cfg.sigma_p * cfg.sigma_p);
        let (mut physics, mut d_alpha, mut d_beta) = (0.0, 0.0, 0.0);
        for j in self.n_obs..self.inputs.len() {
            let y = values[j];
            let r = tangents[j] * scale - (alpha - beta * y);
            physics += r * r;
            let g = inv_p * r;
            self.grad_y[j] = g * beta;
            self.grad_dy[j] = g * scale;
            d_alpha -= g;
            d_beta += g * y;
        }
        physics *= 0.5 * inv_p;

        if let Some(grad) = grad_theta {
            grad.fill(0.0);
            net.backward_batch(&mut self.tape, &self.grad_y, &self.grad_dy, grad);
        }
        FitTerms {
            data,
            physics,
            d_alpha,
            d_beta,
        }
    }

    /// All three terms at `(net, kinetics)`.
    pub fn terms(&mut self, net: &SurrogateNetwork, kinetics: &KineticReparam) -> EnergyTerms {
        let (alpha, beta) = (kinetics.alpha(), kinetics.beta());
        let fit = self.fit_terms(net, alpha, beta, None);
        EnergyTerms {
            data: fit.data,
            physics: fit.physics,
            prior: prior_term(net.params(), alpha, beta, &self.config),
        }
    }

    /// Energy terms and the gradient over `(theta, raw_alpha, raw_beta)`,
    /// written into `grad` (length `n_params + 2`).
    pub fn energy_and_gradient(
        &mut self,
        net: &SurrogateNetwork,
        kinetics: &KineticReparam,
        grad: &mut [f64],
    ) -> EnergyTerms {
        let p = net.n_params();
        assert_eq!(grad.len(), p + 2);
        let (alpha, beta) = (kinetics.alpha(), kinetics.beta());
        let fit = self.fit_terms(net, alpha, beta, Some(&mut grad[..p]));
        let cfg = &self.config;
        let w = cfg.prior_weight / (cfg.sigma_w * cfg.sigma_w);
        for (g, theta) in grad[..p].iter_mut().zip(net.params()) {
            *g += w * theta;
        }
        let (ja, jb) = kinetics.jacobian();
        grad[p] = ja * (fit.d_alpha + cfg.prior_weight * cfg.prior_alpha.energy_grad(alpha));
        grad[p + 1] = jb * (fit.d_beta + cfg.prior_weight * cfg.prior_beta.energy_grad(beta));
        EnergyTerms {
            data: fit.data,
            physics: fit.physics,
            prior: prior_term(net.params(), alpha, beta, cfg),
        }
    }
}

/// Total energy of `(net, kinetics)` on a training slice.
pub fn total_energy(
    net: &SurrogateNetwork,
    kinetics: &KineticReparam,
    training: &LongitudinalSeries,
    config: &EnergyConfig,
) -> Result<f64> {
    if training.is_empty() {
        return Err(Error::arg("training slice is empty"));
    }
    let mut problem = EnergyProblem::new(training, config)?;
    Ok(problem.terms(net, kinetics).total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gompertz::GompertzParams;
    use crate::surrogate::DEFAULT_LAYER_SIZES;

    fn toy_series() -> LongitudinalSeries {
        LongitudinalSeries::new("toy", vec![0.0, 365.0], vec![2f64.exp(), 3f64.exp()]).unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(collocation_grid(0.0, 1.0, 2).unwrap(), vec![0.0, 1.0]);
        assert_eq!(collocation_grid(0.0, 10.0, 5).unwrap(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert!(collocation_grid(1.0, 1.0, 5).is_err());
        assert!(collocation_grid(0.0, 1.0, 1).is_err());
        let g = collocation_grid(3.0, 17.0, 200).unwrap();
        let h = 14.0 / 199.0;
        for w in g.windows(2) {
            assert!((w[1] - w[0] - h).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_energy_matches_straight_line_sums() {
        let cfg = EnergyConfig::default();
        let net = SurrogateNetwork::zeros(&DEFAULT_LAYER_SIZES).unwrap();
        let kin = KineticReparam::from_rates(0.2, 0.05).unwrap();
        let (alpha, beta) = (kin.alpha(), kin.beta());
        let e = total_energy(&net, &kin, &toy_series(), &cfg).unwrap();
        // Zero network: y = 0 and dy/dt = 0 everywhere, so r = -alpha.
        let data = (2.0f64 * 2.0 + 3.0 * 3.0) / (2.0 * 0.04);
        let physics = (0..200).map(|_| alpha * alpha).sum::<f64>() / 200.0 / (2.0 * 0.25);
        let prior = alpha.ln() + (alpha.ln() - 0.2f64.ln()).powi(2) / (2.0 * 0.25)
            + beta.ln()
            + (beta.ln() - 0.05f64.ln()).powi(2) / (2.0 * 0.25);
        assert!((e - (data + physics + prior)).abs() < 1e-10, "{e}");
    }

    #[test]
    fn exact_dynamics_have_no_physics_energy() {
        let cfg = EnergyConfig::default();
        let p = GompertzParams::new(0.2, 0.05, 1.0, 0.0).unwrap();
        let grid = collocation_grid(0.0, 365.0, 200).unwrap();
        let values: Vec<f64> = grid.iter().map(|&t| p.closed_form_log(t)).collect();
        let rates: Vec<f64> = grid.iter().map(|&t| p.closed_form_log_rate(t)).collect();
        assert!(physics_term(&values, &rates, 0.2, 0.05, &cfg) < 1e-8);
        assert_eq!(data_term(&values[..2], &values[..2], &cfg), 0.0);
    }

    #[test]
    fn terms_decompose_and_scale() {
        let cfg = EnergyConfig::default();
        let net = SurrogateNetwork::glorot(&DEFAULT_LAYER_SIZES, 1).unwrap();
        let kin = KineticReparam::from_rates(0.3, 0.04).unwrap();
        let mut problem = EnergyProblem::new(&toy_series(), &cfg).unwrap();
        let terms = problem.terms(&net, &kin);
        let e = total_energy(&net, &kin, &toy_series(), &cfg).unwrap();
        assert_eq!(e, terms.data + terms.physics + terms.prior);

        let halved = EnergyConfig {
            sigma_d: 0.1,
            ..cfg.clone()
        };
        let mut p2 = EnergyProblem::new(&toy_series(), &halved).unwrap();
        let t2 = p2.terms(&net, &kin);
        assert!((t2.data - 4.0 * terms.data).abs() < 1e-12 * t2.data);
        assert_eq!(t2.physics, terms.physics);
        assert_eq!(t2.prior, terms.prior);
    }

    #[test]
    fn rejects_short_or_invalid_input() {
        let one = LongitudinalSeries::new("p", vec![0.0], vec![1.0]).unwrap();
        let cfg = EnergyConfig::default();
        assert!(matches!(EnergyProblem::new(&one, &cfg), Err(Error::UnfitSeries { .. })));
        let bad = EnergyConfig {
            sigma_p: 0.0,
            ..cfg
        };
        assert!(EnergyProblem::new(&toy_series(), &bad).is_err());
    }

    #[test]
    fn interpolating_output_has_zero_data_gradient() {
        // One observation at y = b_out, network output is the bias.
        let series = LongitudinalSeries::new("p", vec![0.0, 10.0], vec![1.5f64.exp(), 1.5f64.exp()]).unwrap();
        let cfg = EnergyConfig {
            physics_weight: 0.0,
            prior_weight: 0.0,
            ..EnergyConfig::default()
        };
        let sizes = [1, 3, 1];
        let mut params = vec![0.0; crate::surrogate::parameter_count(&sizes)];
        *params.last_mut().unwrap() = 1.5;
        let net = SurrogateNetwork::from_params(&sizes, params).unwrap();
        let kin = KineticReparam::from_rates(0.2, 0.05).unwrap();
        let mut problem = EnergyProblem::new(&series, &cfg).unwrap();
        let mut grad = vec![1.0; net.n_params() + 2];
        let terms = problem.energy_and_gradient(&net, &kin, &mut grad);
        assert_eq!(terms.data, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }
}
