use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log;

/// One patient's longitudinal volume observations.
///
/// Times are in days and strictly increasing; volumes are in mm³ and
/// strictly positive. Log-volumes are cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalSeries {
    patient_id: String,
    times: Vec<f64>,
    volumes: Vec<f64>,
    log_volumes: Vec<f64>,
}

impl LongitudinalSeries {
    pub fn new(patient_id: impl Into<String>, times: Vec<f64>, volumes: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::arg("series must contain at least one observation"));
        }
        if times.len() != volumes.len() {
            return Err(Error::arg("times and volumes differ in length"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::arg("non-finite observation time"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("observation times must be strictly increasing"));
        }
        if volumes.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::arg("volumes must be finite and strictly positive"));
        }
        let log_volumes = volumes.iter().map(|&v| log(v)).collect();
        Ok(Self {
            patient_id: patient_id.into(),
            times,
            volumes,
            log_volumes,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn log_volumes(&self) -> &[f64] {
        &self.log_volumes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Observations with index in `range`, as a new series.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::arg("empty or out-of-bounds slice"));
        }
        Ok(Self {
            patient_id: self.patient_id.clone(),
            times: self.times[range.clone()].to_vec(),
            volumes: self.volumes[range.clone()].to_vec(),
            log_volumes: self.log_volumes[range].to_vec(),
        })
    }

    /// Temporal holdout: the first `train_count` observations train, the final
    /// observation is held out. Observations in between (series longer than
    /// `train_count + 1`) are used by neither side.
    pub fn holdout_split(&self, train_count: usize) -> Result<(Self, Self)> {
        if train_count == 0 {
            return Err(Error::arg("training slice must be nonempty"));
        }
        if self.len() <= train_count {
            return Err(Error::UnfitSeries {
                needed: train_count + 1,
                got: self.len(),
            });
        }
        let n = self.len();
        Ok((self.slice(0..train_count)?, self.slice(n - 1..n)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_input() {
        assert!(LongitudinalSeries::new("p", vec![], vec![]).is_err());
        assert!(LongitudinalSeries::new("p", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(LongitudinalSeries::new("p", vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(LongitudinalSeries::new("p", vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(LongitudinalSeries::new("p", vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn caches_log_volumes() {
        let s = LongitudinalSeries::new("p", vec![0.0, 10.0], vec![1.0, 100.0]).unwrap();
        assert_eq!(s.log_volumes()[0], 0.0);
        assert!((s.log_volumes()[1] - 100f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn holdout_split_takes_first_two_and_last() {
        let s = LongitudinalSeries::new("p", vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (train, test) = s.holdout_split(2).unwrap();
        assert_eq!(train.times(), &[0.0, 1.0]);
        assert_eq!(test.times(), &[3.0]);
        let short = s.slice(0..2).unwrap();
        assert!(matches!(short.holdout_split(2), Err(Error::UnfitSeries { .. })));
    }
}
