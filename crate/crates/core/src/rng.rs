//! Counter-based random streams.
//!
//! Every random draw in the simulator is keyed by `(global seed, stream tag, index...)`
//! so that the value a node observes at a slot never depends on the order in
//! which engines happen to query it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep unrelated consumers of the same global seed apart.
pub mod tag {
    pub const STATE: u64 = 0x5354_4154_455f_5f5f;
    pub const DELAY: u64 = 0x4445_4c41_595f_5f5f;
    pub const MONTE_CARLO: u64 = 0x4d4f_4e54_455f_4341;
    pub const ANALYSIS: u64 = 0x414e_414c_5953_4953;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit seed.
pub fn derive_seed(global: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(mix64(global), |acc, &w| mix64(acc ^ mix64(w)))
}

/// Generator for the state of `node` at `slot`.
pub fn state_rng(global: u64, node: usize, slot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, &[tag::STATE, node as u64, slot]))
}

/// Sequential generator for a named stream.
pub fn stream_rng(global: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, &[stream]))
}
