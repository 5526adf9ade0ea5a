//! Counter-based random streams.
//!
//! Every draw is keyed by `(seed, tag, index)`: the seed and tag fill the
//! ChaCha key, the index selects the stream. A sample therefore depends only
//! on its own key and never on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags separating independent uses of one user seed.
pub mod tags {
    pub const MC_INTEGRATE: u64 = 1;
    pub const LOGZ_TERM: u64 = 0x100;
    pub const PRESSURE_TERM: u64 = 0x200;
    pub const RHO2_TERM: u64 = 0x300;
    pub const GAMMA_PROBE: u64 = 0x400;
    pub const KP_PROBE: u64 = 0x500;
}

pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
