//! Seeded random streams.
//!
//! Every simulation owns one [`SimRng`]. Run `i` of an ensemble seeded with
//! `seed` uses the stream `seed ^ (i * GOLDEN)`, so ensembles with different
//! base seeds do not share runs for small indices.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream seed of run `index` within an ensemble.
pub fn run_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(GOLDEN)
}

pub fn run_rng(seed: u64, index: u64) -> SimRng {
    rng_from_seed(run_seed(seed, index))
}
