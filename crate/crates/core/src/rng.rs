//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! `u64` seed and a stream id, so separate consumers (network init, chains,
//! predictive noise) never share a sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as Rng;

/// Stream ids used by the per-patient pipeline.
pub mod stream {
    pub const NETWORK_INIT: u64 = 1;
    pub const HMC: u64 = 2;
    pub const PREDICTIVE_NOISE: u64 = 3;
    pub const SIMULATION: u64 = 4;
    pub const GP: u64 = 5;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-patient seed: the run seed XOR the patient's index in the cohort.
pub fn patient_seed(run_seed: u64, patient_index: usize) -> u64 {
    run_seed ^ patient_index as u64
}

/// Fit seed for a patient: the run seed XOR the 64-bit FNV-1a hash of its
/// id, so results do not depend on where the patient sits in the cohort.
pub fn series_seed(run_seed: u64, patient_id: &str) -> u64 {
    let hash = patient_id
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
    run_seed ^ hash
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
