//! MAP training of the surrogate and kinetic rates with full-batch Adam.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::energy::{EnergyConfig, EnergyProblem, EnergyTerms};
use crate::error::{Error, Result};
use crate::math::exp;
use crate::series::LongitudinalSeries;
use crate::surrogate::{KineticReparam, SurrogateNetwork, TimeNormalizer, DEFAULT_LAYER_SIZES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub layer_sizes: Vec<usize>,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 5000,
            seed: 42,
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub network: SurrogateNetwork,
    pub normalizer: TimeNormalizer,
    pub kinetics: KineticReparam,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    /// Network prediction at `t0`.
    pub y0_hat: f64,
    /// First training time; the reference time of the kinetic model.
    pub t0: f64,
    pub final_energy: f64,
    pub final_terms: EnergyTerms,
    /// Energy at the start of every epoch.
    pub energy_trace: Vec<f64>,
}

impl MapResult {
    pub fn predict(&self, t: f64) -> f64 {
        self.network.forward(&self.normalizer, t)
    }
}

/// Minimize the total energy over `(theta, raw_alpha, raw_beta)`.
///
/// The network starts from a seeded Glorot draw and the rates from the
/// medians of their priors. Collocation points stay fixed for the run.
pub fn map_fit(training: &LongitudinalSeries, energy: &EnergyConfig, opt: &MapConfig) -> Result<MapResult> {
    let mut problem = EnergyProblem::new(training, energy)?;
    let mut network = SurrogateNetwork::glorot(&opt.layer_sizes, opt.seed)?;
    let mut kinetics = KineticReparam::from_rates(exp(energy.prior_alpha.mu), exp(energy.prior_beta.mu))?;
    if !(opt.learning_rate >= 0.0 && opt.learning_rate.is_finite()) {
        return Err(Error::arg("learning rate must be finite and nonnegative"));
    }
    let adam_config = AdamConfig {
        learning_rate: opt.learning_rate,
        ..AdamConfig::default()
    };
    // Adam is coordinate-wise, so two instances equal one over the joint vector.
    let mut adam_net = Adam::new(adam_config, network.n_params());
    let mut adam_kin = Adam::new(adam_config, 2);
    let p = network.n_params();
    let mut grad = vec![0.0; p + 2];
    let mut trace = Vec::with_capacity(opt.epochs);

    for epoch in 0..opt.epochs {
        let terms = problem.energy_and_gradient(&network, &kinetics, &mut grad);
        let total = terms.total();
        if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        trace.push(total);
        adam_net.step(network.params_mut(), &grad[..p]);
        let mut raw = [kinetics.raw_alpha, kinetics.raw_beta];
        adam_kin.step(&mut raw, &grad[p..]);
        kinetics = KineticReparam {
            raw_alpha: raw[0],
            raw_beta: raw[1],
        };
    }

    let final_terms = problem.terms(&network, &kinetics);
    let final_energy = final_terms.total();
    if !final_energy.is_finite() {
        return Err(Error::Divergence { epoch: opt.epochs });
    }
    let normalizer = *problem.normalizer();
    let t0 = training.first_time();
    let y0_hat = network.forward(&normalizer, t0);
    Ok(MapResult {
        alpha_hat: kinetics.alpha(),
        beta_hat: kinetics.beta(),
        y0_hat,
        t0,
        network,
        normalizer,
        kinetics,
        final_energy,
        final_terms,
        energy_trace: trace,
    })
}
