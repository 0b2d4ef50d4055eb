//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by the user
//! seed plus a path of integer tags (dimension, permutation, fold, ...). Streams
//! never share state, so the order in which parallel tasks run cannot change
//! any result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a tag path.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Independent generator for the stream identified by `tags`.
pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

// Stream tags used across modules.
pub(crate) mod tag {
    pub const PERMUTATION: u64 = 1;
    pub const RHO_SAMPLES: u64 = 2;
    pub const FOLDS: u64 = 3;
    pub const CV_SAMPLES: u64 = 4;
    pub const MARGINAL: u64 = 5;
    pub const VINE_SAMPLE: u64 = 6;
    pub const MODEL_SAMPLE: u64 = 7;
    pub const LABELS: u64 = 8;
    pub const SPLIT: u64 = 9;
    pub const GMM_PARAMS: u64 = 10;
    pub const GMM_DRAWS: u64 = 11;
    pub const FEATURES: u64 = 12;
}
