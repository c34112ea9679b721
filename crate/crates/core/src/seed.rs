//! Sub-seed derivation.
//!
//! Every random object in the lab is drawn from a `ChaCha8Rng` seeded with
//! `derive_seed(root, tag, index)`. The mixing function is SplitMix64 applied
//! twice, so the mapping is stable across releases and independent of the
//! order in which trials are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain-separation tags for the independent random sources.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum SeedTag {
    Intervals = 0x494e_5456,
    Sigma = 0x5349_474d,
    BlockBits = 0x5242_4954,
    PlayerOrder = 0x504f_5244,
    PlayerCoins = 0x50_434f_494e,
    Instance = 0x494e_5354,
    Estimator = 0x4553_544d,
    Trial = 0x5452_4941,
    Thinned = 0x5448_494e,
    Subset = 0x5355_4253,
    Protocol = 0x5052_4f54,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `mix(root, tag, index)`: the documented sub-seed derivation.
pub fn derive_seed(root: u64, tag: SeedTag, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ (tag as u64).rotate_left(17)) ^ index)
}

pub fn rng_for(root: u64, tag: SeedTag, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, tag, index))
}
