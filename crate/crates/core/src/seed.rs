//! Seed derivation.
//!
//! Every random stream in the pipeline is seeded from one user seed. Child
//! seeds are produced by SplitMix64 finalization over `(parent, stream, index)`
//! so any single replicate or phenotype draw can be regenerated in isolation,
//! and results never depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags separating independent uses of one parent seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Replicate = 2,
    Phenotype = 3,
    Simulate = 4,
    InjectLd = 5,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for item `index` of `stream` under `parent`.
pub fn derive_seed(parent: u64, stream: Stream, index: u64) -> u64 {
    let a = mix64(parent ^ (stream as u64).wrapping_mul(GOLDEN_GAMMA));
    mix64(a ^ mix64(index))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
