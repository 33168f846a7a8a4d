//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream keyed by
//! `(seed, domain, index)`, so results never depend on how work is scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const DOMAIN_GRID: u64 = 1;
pub(crate) const DOMAIN_BOOTSTRAP: u64 = 2;
pub(crate) const DOMAIN_VARIANCE: u64 = 3;
pub(crate) const DOMAIN_HIT_AND_RUN: u64 = 4;
pub(crate) const DOMAIN_DESIGN: u64 = 5;
/// Per-replication seeds of Monte Carlo studies.
pub const DOMAIN_SIMULATION: u64 = 6;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for replicate `index` of `domain` under `seed`.
pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(domain)));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. one per Monte Carlo replication.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(domain)).wrapping_add(index))
}
