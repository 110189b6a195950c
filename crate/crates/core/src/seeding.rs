//! Seed derivation for reproducible parallel Monte-Carlo.
//!
//! Every replication owns a ChaCha8 stream seeded by [`derive_seed`], which
//! folds a master seed and a list of integer coordinates (stream tag,
//! replication index, problem sizes) through the SplitMix64 finalizer. The
//! mapping is fixed, so results do not depend on the thread count or on the
//! order in which replications are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `master` with each coordinate in turn.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Stream for one replication of an experiment.
pub fn stream(master: u64, coords: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, coords))
}

/// Uniform draw from the open interval (0, 1) with 53 random bits.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Stream tags keep logically distinct experiments on disjoint seeds.
pub mod tags {
    pub const MODEL: u64 = 1;
    pub const NULL: u64 = 2;
    pub const ESD: u64 = 3;
    pub const CLT: u64 = 4;
    pub const XI4_CENTERING: u64 = 5;
    pub const TIES: u64 = 6;
}
