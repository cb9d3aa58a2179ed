//! Seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator keyed by a 64-bit seed
//! derived from the run seed with SplitMix64 finalization. ChaCha8 output is
//! specified bit-for-bit, so arm sequences, shuffles and initializations are
//! identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Model initialization stream.
pub const STREAM_INIT: u64 = 0x1;
/// Bandit arm-sampling stream.
pub const STREAM_BANDIT: u64 = 0x2;
/// Per-epoch shuffle streams are `STREAM_SHUFFLE ^ epoch`.
pub const STREAM_SHUFFLE: u64 = 0x5348_5546_0000_0000;
/// Cost-environment stream for the regret simulator.
pub const STREAM_ENV: u64 = 0x3;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Seed of the shuffle for epoch `epoch` of a run seeded with `run_seed`.
pub fn epoch_seed(run_seed: u64, epoch: usize) -> u64 {
    derive_seed(run_seed, STREAM_SHUFFLE ^ epoch as u64)
}

/// Maps 64 random bits to a uniform double in `[0, 1)` using the top 53 bits.
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
