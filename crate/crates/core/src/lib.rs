//! Bayesian physics-informed inference of Gompertz tumor-growth kinetics.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every per-patient
//! algorithm: the growth model and its solvers, the neural surrogate with
//! exact derivatives, MAP training, Hamiltonian Monte Carlo over the kinetic
//! parameters, posterior predictive summaries, evaluation metrics and the
//! comparison baselines. File formats, the cohort runner and the CLI live in
//! the `bpinn` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adam;
pub mod baselines;
pub mod energy;
pub mod error;
pub mod evaluate;
pub mod gompertz;
pub mod gp;
pub mod hmc;
pub mod linalg;
pub mod map;
pub mod math;
pub mod predictive;
pub mod prior;
pub mod rng;
pub mod series;
pub mod simulate;
pub mod surrogate;

pub use error::{Error, Result};
pub use gompertz::{GompertzParams, ObservationNoise};
pub use series::LongitudinalSeries;
