//! Named random sub-streams derived from one master seed.
//!
//! Every stochastic component draws from its own stream so that modules can
//! be re-run in isolation without perturbing each other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Portable, seedable generator used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Stream names used by the experiment pipeline.
pub mod streams {
    pub const DRAM_SYNTHESIS: &str = "dram-synthesis";
    pub const HAMMER: &str = "hammer";
    pub const PROFILING_DATA: &str = "profiling-data";
    pub const ASLR: &str = "aslr";
    pub const ATTACK: &str = "attack";
    pub const VICTIM: &str = "victim";
    pub const BACKGROUND: &str = "background";
    pub const KEY: &str = "key";
}

/// Derive a 32-byte seed for `name` under `master`.
pub fn derive_seed(master: u64, name: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((name.len() as u64).to_le_bytes());
    h.update(name.as_bytes());
    h.finalize().into()
}

/// Derive a 64-bit seed for `name` under `master`.
pub fn derive_u64(master: u64, name: &str) -> u64 {
    let s = derive_seed(master, name);
    u64::from_le_bytes(s[..8].try_into().expect("8 bytes"))
}

/// Generator for the named sub-stream.
pub fn substream(master: u64, name: &str) -> SimRng {
    SimRng::from_seed(derive_seed(master, name))
}

/// SplitMix64 finaliser; used for counter-based page contents.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
