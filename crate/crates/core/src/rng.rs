//! Seed handling.
//!
//! Every stochastic stage runs on a `ChaCha8Rng`. Independent streams (one per
//! drop, per field, per restart) are derived from a master seed with
//! [`derive_seed`], so results never depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` under `master`: two rounds of SplitMix64 over
/// the master seed and the stream index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Labelled sub-streams used inside one drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Lsp = 2,
    Clusters = 3,
    ClusterCount = 4,
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    rng_from_seed(derive_seed(seed, stream as u64))
}
