//! Counter-based seed derivation.
//!
//! Every random stream of a run is a pure function of
//! `(master_seed, replication, stream)`, so results do not depend on how
//! replications are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Instance draw for a replication.
pub const INSTANCE_STREAM: u64 = 0;
/// Environment randomness; shared by all algorithms of a replication.
pub const ENV_STREAM: u64 = 1;
/// Policy `a` uses stream `POLICY_STREAM_BASE + a`.
pub const POLICY_STREAM_BASE: u64 = 2;
/// Outer prior draw in the nested Bernoulli protocol (indexed by outer block).
pub const PRIOR_STREAM: u64 = u64::MAX;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 output function applied to `x + γ`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, replication: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ replication) ^ stream)
}

pub fn stream_rng(master: u64, replication: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, replication, stream))
}
