//! Posterior predictive trajectories, credible bands and scoring metrics.
//!
//! Percentiles use linear interpolation between order statistics: for sorted
//! samples `x[0..n]` and probability `q`, `h = (n - 1) q` and the percentile is
//! `x[floor(h)] + (h - floor(h)) (x[floor(h) + 1] - x[floor(h)])`.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gompertz::checked_exp;
use crate::hmc::PosteriorSamples;
use crate::math::{exp, sqrt};
use crate::rng::{seeded, standard_normal, stream};

/// Nominal levels of the calibration curve.
pub const CALIBRATION_LEVELS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95];

/// Log-volume draws on a time grid, row-major `n_draws x times.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectories {
    times: Vec<f64>,
    n_draws: usize,
    values: Vec<f64>,
}

impl Trajectories {
    pub fn new(times: Vec<f64>, n_draws: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_draws * times.len() {
            return Err(Error::arg("trajectory matrix has the wrong size"));
        }
        Ok(Self { times, n_draws, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        let m = self.times.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// All draws at grid point `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let m = self.times.len();
        (0..self.n_draws).map(|i| self.values[i * m + j]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn check_ascending(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("grid must be finite and strictly ascending"));
    }
    Ok(())
}

/// `n` evenly spaced times over `[t_min, t_max]`.
pub fn uniform_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    crate::energy::collocation_grid(t_min, t_max, n)
}

/// Closed-form log trajectory of every retained draw.
pub fn predictive_trajectories(samples: &PosteriorSamples, grid: &[f64]) -> Result<Trajectories> {
    check_ascending(grid)?;
    let mut values = Vec::with_capacity(samples.len() * grid.len());
    for d in &samples.draws {
        let k = d.alpha / d.beta;
        for t in grid {
            values.push(k + (d.y0 - k) * exp(-d.beta * (t - samples.t0)));
        }
    }
    Trajectories::new(grid.to_vec(), samples.len(), values)
}

/// Adds independent `N(0, sigma_i^2)` observation noise to every entry;
/// `sigma` holds one value or one per draw.
pub fn add_observation_noise(traj: &Trajectories, sigma: &[f64], seed: u64) -> Result<Trajectories> {
    if !(sigma.len() == 1 || sigma.len() == traj.n_draws) {
        return Err(Error::arg("need one noise sd or one per draw"));
    }
    if sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::arg("noise sd must be finite and nonnegative"));
    }
    let mut rng = seeded(seed, stream::PREDICTIVE_NOISE);
    let m = traj.times.len();
    let mut values = traj.values.clone();
    for (i, row) in values.chunks_mut(m.max(1)).enumerate() {
        let s = if sigma.len() == 1 { sigma[0] } else { sigma[i] };
        for v in row {
            *v += s * standard_normal(&mut rng);
        }
    }
    Trajectories::new(traj.times.clone(), traj.n_draws, values)
}

/// Percentile of sorted samples under the linear-interpolation rule.
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::arg("no samples"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::arg("percentile probability outside [0, 1]"));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h as usize;
    if lo + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    Ok(sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo]))
}

/// Central interval `(lo, hi)` of unsorted samples at `level`.
pub fn central_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::arg("level must lie in (0, 1]"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::arg("NaN sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok((percentile(&sorted, tail)?, percentile(&sorted, 1.0 - tail)?))
}

/// Pointwise band over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: Vec<f64>,
    pub mean: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Sample mean and central percentiles of the log trajectories at every grid point.
pub fn credible_band(traj: &Trajectories, level: f64) -> Result<Band> {
    if traj.n_draws == 0 {
        return Err(Error::arg("empty trajectory set"));
    }
    let m = traj.times.len();
    let mut band = Band {
        lo: Vec::with_capacity(m),
        mean: Vec::with_capacity(m),
        hi: Vec::with_capacity(m),
    };
    for j in 0..m {
        let col = traj.column(j);
        let (lo, hi) = central_interval(&col, level)?;
        band.lo.push(lo);
        band.mean.push(crate::math::mean(&col));
        band.hi.push(hi);
    }
    Ok(band)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub grid: Vec<f64>,
    pub level: f64,
    pub mean_log: Vec<f64>,
    pub lo_log: Vec<f64>,
    pub hi_log: Vec<f64>,
    pub mean_vol: Vec<f64>,
    pub lo_vol: Vec<f64>,
    pub hi_vol: Vec<f64>,
}

impl PredictiveSummary {
    /// Volume percentiles are the exponentials of the log percentiles: the
    /// interpolation runs in log space, so the two bands map onto each other
    /// exactly. The volume mean is the mean of the exponentiated draws.
    pub fn from_trajectories(traj: &Trajectories, level: f64) -> Result<Self> {
        let band = credible_band(traj, level)?;
        let m = traj.times.len();
        let mut mean_vol = Vec::with_capacity(m);
        for j in 0..m {
            let mut s = 0.0;
            for i in 0..traj.n_draws {
                s += checked_exp(traj.values[i * m + j])?;
            }
            mean_vol.push(s / traj.n_draws as f64);
        }
        Ok(Self {
            grid: traj.times.clone(),
            level,
            lo_vol: band.lo.iter().map(|&y| exp(y)).collect(),
            hi_vol: band.hi.iter().map(|&y| exp(y)).collect(),
            mean_log: band.mean,
            lo_log: band.lo,
            hi_log: band.hi,
            mean_vol,
        })
    }

    /// Point predictions without uncertainty: the band collapses onto them.
    pub fn point(grid: Vec<f64>, log_values: Vec<f64>) -> Result<Self> {
        if grid.len() != log_values.len() {
            return Err(Error::arg("grid and predictions differ in length"));
        }
        let vol = log_values.iter().map(|&y| checked_exp(y)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            level: 0.0,
            mean_log: log_values.clone(),
            lo_log: log_values.clone(),
            hi_log: log_values,
            mean_vol: vol.clone(),
            lo_vol: vol.clone(),
            hi_vol: vol,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Fraction of observations inside `[lo, hi]`, bounds inclusive.
pub fn coverage(observed: &[f64], lo: &[f64], hi: &[f64]) -> Result<f64> {
    if observed.len() != lo.len() || observed.len() != hi.len() {
        return Err(Error::arg("observations and band differ in length"));
    }
    if observed.is_empty() {
        return Err(Error::arg("no observations"));
    }
    let inside = observed
        .iter()
        .zip(lo.iter().zip(hi))
        .filter(|(x, (l, h))| *l <= *x && *x <= *h)
        .count();
    Ok(inside as f64 / observed.len() as f64)
}

/// Winkler score of the central interval `[lo, hi]` at nominal `level`.
pub fn interval_score(lo: f64, hi: f64, x: f64, level: f64) -> Result<f64> {
    if hi < lo {
        return Err(Error::arg("interval upper bound below lower bound"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::arg("level must lie in (0, 1)"));
    }
    let penalty = 2.0 / (1.0 - level);
    let mut score = hi - lo;
    if x < lo {
        score += penalty * (lo - x);
    } else if x > hi {
        score += penalty * (x - hi);
    }
    Ok(score)
}

/// Mean over points of `(hi - lo) / mean`, volume space.
pub fn rel_ci_width(lo: &[f64], hi: &[f64], mean: &[f64]) -> Result<f64> {
    if lo.len() != hi.len() || lo.len() != mean.len() || lo.is_empty() {
        return Err(Error::arg("band vectors must be nonempty and equally long"));
    }
    let mut s = 0.0;
    for ((l, h), m) in lo.iter().zip(hi).zip(mean) {
        if !(*m > 0.0) {
            return Err(Error::Range(*m));
        }
        s += (h - l) / m;
    }
    Ok(s / lo.len() as f64)
}

/// `rel_ci_width` restricted to each inclusive time window.
pub fn uncertainty_profile(summary: &PredictiveSummary, windows: &[(f64, f64)]) -> Result<Vec<f64>> {
    windows
        .iter()
        .map(|&(a, b)| {
            let idx: Vec<usize> = (0..summary.len()).filter(|&j| summary.grid[j] >= a && summary.grid[j] <= b).collect();
            if idx.is_empty() {
                return Err(Error::arg("window contains no grid points"));
            }
            let pick = |v: &[f64]| idx.iter().map(|&j| v[j]).collect::<Vec<_>>();
            rel_ci_width(&pick(&summary.lo_vol), &pick(&summary.hi_vol), &pick(&summary.mean_vol))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rmse_log: f64,
    pub rmse_vol: f64,
    pub mae_vol: f64,
    pub mae_log: f64,
}

/// Residual metrics of posterior-mean predictions against observations.
pub fn error_metrics(pred_log: &[f64], pred_vol: &[f64], obs_log: &[f64], obs_vol: &[f64]) -> Result<ErrorMetrics> {
    let n = pred_log.len();
    if n == 0 || pred_vol.len() != n || obs_log.len() != n || obs_vol.len() != n {
        return Err(Error::arg("prediction and observation lengths differ"));
    }
    let nf = n as f64;
    let (mut sl, mut al, mut sv, mut av) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let rl = obs_log[i] - pred_log[i];
        let rv = obs_vol[i] - pred_vol[i];
        sl += rl * rl;
        al += rl.abs();
        sv += rv * rv;
        av += rv.abs();
    }
    Ok(ErrorMetrics {
        rmse_log: sqrt(sl / nf),
        rmse_vol: sqrt(sv / nf),
        mae_vol: av / nf,
        mae_log: al / nf,
    })
}

/// One held-out observation with its band at every nominal level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCase {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub observed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub nominal: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub points: Vec<CalibrationPoint>,
    pub mean_abs_gap: f64,
}

/// Pooled empirical coverage per nominal level.
pub fn calibration_curve(levels: &[f64], cases: &[CalibrationCase]) -> Result<CalibrationCurve> {
    if levels.is_empty() || cases.is_empty() {
        return Err(Error::arg("calibration needs levels and cases"));
    }
    if cases.iter().any(|c| c.lo.len() != levels.len() || c.hi.len() != levels.len()) {
        return Err(Error::arg("each case needs one band per level"));
    }
    let points: Vec<CalibrationPoint> = levels
        .iter()
        .enumerate()
        .map(|(k, &nominal)| {
            let inside = cases.iter().filter(|c| c.lo[k] <= c.observed && c.observed <= c.hi[k]).count();
            CalibrationPoint {
                nominal,
                empirical: inside as f64 / cases.len() as f64,
            }
        })
        .collect();
    let mean_abs_gap = points.iter().map(|p| (p.empirical - p.nominal).abs()).sum::<f64>() / points.len() as f64;
    Ok(CalibrationCurve { points, mean_abs_gap })
}

/// Bands at every level for one column of draws.
pub fn calibration_case(draws: &[f64], levels: &[f64], observed: f64) -> Result<CalibrationCase> {
    let mut case = CalibrationCase {
        lo: Vec::with_capacity(levels.len()),
        hi: Vec::with_capacity(levels.len()),
        observed,
    };
    for &level in levels {
        let (lo, hi) = central_interval(draws, level)?;
        case.lo.push(lo);
        case.hi.push(hi);
    }
    Ok(case)
}
