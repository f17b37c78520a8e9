//! Seeded random sub-streams.
//!
//! Every random quantity of a trial is drawn from its own ChaCha stream whose
//! seed is derived from the master seed and a list of integer keys. Streams
//! are therefore independent of execution order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source used by every module.
pub type SimRng = ChaCha8Rng;

/// Purpose tags for per-trial sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Fading = 1,
    BsEstimate = 2,
    AttackerEstimate = 3,
    RandomPhases = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `keys` into `seed`. Order of the keys matters.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Random stream for `keys` under `seed`.
pub fn stream(seed: u64, keys: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, keys))
}
