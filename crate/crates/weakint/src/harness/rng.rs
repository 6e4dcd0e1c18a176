//! Replication-parallel random number streams.
//!
//! Each replication r owns the ChaCha12 stream seeded with
//! `splitmix64(master_seed xor splitmix64(r + 1))`, so runs are reproducible
//! for any worker count and replications can run in any order. The Monte
//! Carlo truth reference uses its own seed derived from the master seed with
//! a distinct tag.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::numeric::splitmix64;

/// Name of the substream scheme, recorded in experiment metadata.
pub const RNG_ALGORITHM: &str = "chacha12(splitmix64(master ^ splitmix64(rep + 1)))";

const REFERENCE_TAG: u64 = 0x7265_6665_7265_6e63;

/// Seed of replication `r`'s substream.
pub fn substream_seed(master_seed: u64, replication: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(replication.wrapping_add(1)))
}

/// The substream generator for replication `r`.
pub fn substream(master_seed: u64, replication: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(substream_seed(master_seed, replication))
}

/// Seed of the Monte Carlo truth-reference stream.
pub fn reference_seed(master_seed: u64) -> u64 {
    splitmix64(master_seed ^ REFERENCE_TAG)
}
