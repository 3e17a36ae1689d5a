//! Seeding.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`]. Replica `i` of an
//! experiment with master seed `s` is seeded with [`derive_seed`]`(s, i)`, so a
//! replica's output depends only on `(s, i)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`: `mix64(master + (index + 1) * 0x9e3779b97f4a7c15)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn stream(master: u64, index: u64) -> ChainRng {
    ChainRng::seed_from_u64(derive_seed(master, index))
}
