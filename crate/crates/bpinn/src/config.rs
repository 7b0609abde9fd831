//! Run configuration loaded from TOML. Unknown keys are rejected.
//!
//! `map.seed` and `hmc.seed` are replaced by the per-patient seed
//! `seed ^ patient_index` in cohort runs.

use std::path::Path;

use bpinn_core::energy::EnergyConfig;
use bpinn_core::evaluate::{EvalConfig, Method, PipelineConfig};
use bpinn_core::hmc::HmcConfig;
use bpinn_core::map::MapConfig;
use bpinn_core::simulate::CohortConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Points of the prediction grid.
    pub grid_points: usize,
    /// Patients drawn by `simulate`.
    pub patients: usize,
    /// Methods to run; each subcommand has its own default when unset.
    pub methods: Option<Vec<Method>>,
    pub energy: EnergyConfig,
    pub map: MapConfig,
    pub hmc: HmcConfig,
    pub eval: EvalConfig,
    pub cohort: CohortConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            grid_points: 200,
            patients: 30,
            methods: None,
            energy: EnergyConfig::default(),
            map: MapConfig::default(),
            hmc: HmcConfig::default(),
            eval: EvalConfig::default(),
            cohort: CohortConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline().validate()?;
        if self.grid_points < 2 {
            return Err(Error::Config("grid_points must be at least 2".into()));
        }
        if self.patients == 0 {
            return Err(Error::Config("patients must be at least 1".into()));
        }
        if matches!(&self.methods, Some(m) if m.is_empty()) {
            return Err(Error::Config("methods must not be empty".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            energy: self.energy.clone(),
            map: self.map.clone(),
            hmc: self.hmc.clone(),
            eval: self.eval.clone(),
        }
    }

    pub fn methods_or(&self, default: &[Method]) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.methods = Some(vec![Method::Proposed, Method::PureGp]);
        cfg.hmc.step_size = 0.02;
        cfg.energy.sigma_p = 0.3;
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_toml(&RunConfig::default().to_toml().unwrap()).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_files_keep_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[hmc]\nleapfrog_steps = 10\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.hmc.leapfrog_steps, 10);
        assert_eq!(cfg.hmc.n_samples, 400);
        assert_eq!(cfg.energy, EnergyConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("sede = 7\n").is_err());
        assert!(RunConfig::from_toml("[hmc]\nstep = 0.1\n").is_err());
        assert!(RunConfig::from_toml("[hmc]\nburn_in = 500\n").is_err());
        assert!(RunConfig::from_toml("methods = [\"nope\"]\n").is_err());
        assert!(RunConfig::from_toml("grid_points = 1\n").is_err());
    }
}
