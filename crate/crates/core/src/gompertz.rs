//! Gompertz growth in the volume and log-volume domains.
//!
//! In log space `y = log V` the dynamics are linear, `dy/dt = alpha - beta*y`,
//! with the closed-form solution
//! `y(t) = alpha/beta + (y0 - alpha/beta) * exp(-beta * (t - t0))`.
//! Times are in days and rates per day.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{exp, log};

/// Largest log-volume that is exponentiated.
pub const MAX_LOG_VOLUME: f64 = 700.0;

/// Kinetic triple `(alpha, beta, y0)` anchored at reference time `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzParams {
    alpha: f64,
    beta: f64,
    y0: f64,
    t0: f64,
}

impl GompertzParams {
    pub fn new(alpha: f64, beta: f64, y0: f64, t0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::arg("alpha must be finite and positive"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::arg("beta must be finite and positive"));
        }
        if !y0.is_finite() || !t0.is_finite() {
            return Err(Error::arg("y0 and t0 must be finite"));
        }
        if !(alpha / beta).is_finite() {
            return Err(Error::arg("carrying capacity alpha/beta is not finite"));
        }
        Ok(Self { alpha, beta, y0, t0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Log-space carrying capacity `alpha / beta`.
    pub fn log_capacity(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn closed_form_log(&self, t: f64) -> f64 {
        let k = self.log_capacity();
        k + (self.y0 - k) * exp(-self.beta * (t - self.t0))
    }

    /// `d/dt` of [`Self::closed_form_log`].
    pub fn closed_form_log_rate(&self, t: f64) -> f64 {
        let k = self.log_capacity();
        -self.beta * (self.y0 - k) * exp(-self.beta * (t - self.t0))
    }

    pub fn closed_form_volume(&self, t: f64) -> Result<f64> {
        checked_exp(self.closed_form_log(t))
    }
}

/// `exp(y)` guarded against overflow above [`MAX_LOG_VOLUME`].
pub fn checked_exp(y: f64) -> Result<f64> {
    if y > MAX_LOG_VOLUME || y.is_nan() {
        Err(Error::Range(y))
    } else {
        Ok(exp(y))
    }
}

/// Standard deviation of the additive log-space observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationNoise {
    sigma_v: f64,
}

impl ObservationNoise {
    pub fn new(sigma_v: f64) -> Result<Self> {
        if !(sigma_v > 0.0 && sigma_v.is_finite()) {
            return Err(Error::arg("sigma_v must be finite and positive"));
        }
        Ok(Self { sigma_v })
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }
}

/// RK4 solution of the log-domain ODE for validated parameters.
pub fn integrate_log_ode(params: &GompertzParams, t_grid: &[f64], step: f64) -> Result<Vec<f64>> {
    rk4_log_ode(params.alpha, params.beta, params.y0, params.t0, t_grid, step)
}

/// Raw RK4 entry point for `dy/dt = alpha - beta*y`; accepts `beta = 0`.
pub fn rk4_log_ode(alpha: f64, beta: f64, y0: f64, t0: f64, t_grid: &[f64], step: f64) -> Result<Vec<f64>> {
    rk4_sample(|_, y| alpha - beta * y, y0, t0, t_grid, step)
}

/// RK4 solution of the volume-domain ODE `dV/dt = a*V - b*V*log V`.
pub fn rk4_volume_ode(a: f64, b: f64, v0: f64, t0: f64, t_grid: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(v0 > 0.0) {
        return Err(Error::arg("initial volume must be positive"));
    }
    rk4_sample(|_, v| a * v - b * v * log(v), v0, t0, t_grid, step)
}

/// Fixed-step classical RK4 from `(t0, x0)`, sampled on an ascending grid.
/// Each grid point is reached by whole steps plus one shorter final step.
fn rk4_sample<F>(rhs: F, x0: f64, t0: f64, t_grid: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::arg("step must be positive"));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::arg("time grid must be ascending"));
    }
    if let Some(&first) = t_grid.first() {
        if first < t0 {
            return Err(Error::arg("time grid starts before t0"));
        }
    }
    let rk4 = |t: f64, x: f64, h: f64| {
        let k1 = rhs(t, x);
        let k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        let k4 = rhs(t + h, x + h * k3);
        x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = t0;
    let mut x = x0;
    for &target in t_grid {
        let full = libm::floor((target - t) / step) as u64;
        let start = t;
        for i in 0..full {
            x = rk4(start + i as f64 * step, x, step);
        }
        t = start + full as f64 * step;
        let rest = target - t;
        if rest > 0.0 {
            x = rk4(t, x, rest);
        }
        t = target;
        out.push(x);
    }
    Ok(out)
}

/// Volume of a segmentation mask: voxel count times the voxel spacing product.
pub fn voxel_volume(voxel_count: u64, spacing: [f64; 3]) -> Result<f64> {
    if spacing.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::arg("voxel spacing must be positive"));
    }
    Ok(voxel_count as f64 * spacing[0] * spacing[1] * spacing[2])
}
