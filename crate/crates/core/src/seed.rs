//! Seed derivation shared by every randomized component.
//!
//! All randomness is drawn from `ChaCha8Rng`, which is portable and
//! bit-identical across platforms. Sub-seeds are derived with
//! [`mix_seed`]: `splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` from `seed`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
