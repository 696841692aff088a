//! Seeded generators. Nothing in the crate draws from ambient randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(mix(seed))
}

/// Generator for one stream (node, fold, ...) derived from a run seed, so
/// results do not depend on the order streams are processed in.
pub fn stream(seed: u64, stream: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(stream.wrapping_add(0x5EED))))
}
