//! Counter-based random streams.
//!
//! Every stream is keyed by `(master seed, tag, index)`. The key is hashed
//! with SHA-256 and the digest seeds a ChaCha8 generator, so stream `i` of a
//! tag never depends on how many other streams were consumed or on which
//! worker consumed them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

pub mod tags {
    pub const INPUT: &str = "sdnn.input";
    pub const NETWORK: &str = "sdnn.network";
    pub const PILOT_INPUT: &str = "concentration.pilot.input";
    pub const PILOT_NETWORK: &str = "concentration.pilot.network";
    pub const CLASSIFY_ESTIMATE: &str = "classify.estimate";
    pub const CLASSIFY_AUDIT: &str = "classify.audit";
    pub const CONVEX_FAMILY: &str = "concentration.convex.family";
    pub const RANDOM_WALK: &str = "concentration.random-walk";
    pub const GAMMA_PATHS: &str = "layer-select.paths";
    pub const GAMMA_HOLDOUT: &str = "layer-select.holdout";
    pub const REGIONS: &str = "regions.networks";
}

/// Stream for run `index` under `tag`, derived from `master`.
pub fn stream(master: u64, tag: &str, index: u64) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}

/// Packs a two-level index (e.g. input id, run id) into one stream index.
pub fn pair_index(outer: u64, inner: u64) -> u64 {
    (outer << 32) | (inner & 0xFFFF_FFFF)
}
