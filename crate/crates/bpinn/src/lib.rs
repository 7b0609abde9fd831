//! Cohort runner, file formats and command-line surface on top of `bpinn-core`.

pub mod cli;
pub mod cohort;
pub mod config;
pub mod error;
pub mod io;
pub mod stats;

pub use config::RunConfig;
pub use error::{Error, Result};
