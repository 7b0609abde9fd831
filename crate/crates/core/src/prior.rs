//! Prior families for the kinetic parameters and the initial log-volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log;

/// `N(mean, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normal {
    pub mean: f64,
    pub sd: f64,
}

impl Normal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        let n = Self { mean, sd };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !(self.sd > 0.0 && self.sd.is_finite()) {
            return Err(Error::arg("normal prior needs a finite mean and positive sd"));
        }
        Ok(())
    }

    /// Negative log density without the normalizing constant.
    pub fn energy(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        0.5 * z * z
    }

    pub fn energy_grad(&self, x: f64) -> f64 {
        (x - self.mean) / (self.sd * self.sd)
    }
}

/// Log-normal: `log x ~ N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormal {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let p = Self { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    /// Parameterized by the median `exp(mu)`.
    pub fn with_median(median: f64, sigma: f64) -> Result<Self> {
        if !(median > 0.0) {
            return Err(Error::arg("log-normal median must be positive"));
        }
        Self::new(log(median), sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::arg("log-normal prior needs a finite mu and positive sigma"));
        }
        Ok(())
    }

    /// The Gaussian on `log x`.
    pub fn log_space(&self) -> Normal {
        Normal {
            mean: self.mu,
            sd: self.sigma,
        }
    }

    /// `-log p(x)` in x-space, constants dropped: `log x + (log x - mu)²/(2 sigma²)`.
    pub fn energy(&self, x: f64) -> f64 {
        let lx = log(x);
        lx + self.log_space().energy(lx)
    }

    pub fn energy_grad(&self, x: f64) -> f64 {
        let lx = log(x);
        (1.0 + (lx - self.mu) / (self.sigma * self.sigma)) / x
    }
}

/// Default log-normal prior on the growth rate (median 0.2 per day).
pub fn default_alpha_prior() -> LogNormal {
    LogNormal {
        mu: log(0.2),
        sigma: 0.5,
    }
}

/// Default log-normal prior on the decay rate (median 0.05 per day).
pub fn default_beta_prior() -> LogNormal {
    LogNormal {
        mu: log(0.05),
        sigma: 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_normal_gradient_matches_difference() {
        let p = default_alpha_prior();
        for &x in &[0.05, 0.2, 0.9] {
            let h = 1e-7;
            let fd = (p.energy(x + h) - p.energy(x - h)) / (2.0 * h);
            assert!((fd - p.energy_grad(x)).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn log_normal_mode_is_exp_mu_minus_sigma_sq() {
        let p = default_beta_prior();
        let mode = (p.mu - p.sigma * p.sigma).exp();
        assert!(p.energy_grad(mode).abs() < 1e-9);
    }
}
