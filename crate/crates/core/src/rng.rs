//! Deterministic random streams keyed by `(seed, label, index)`.
//!
//! Each stream is a ChaCha8 generator whose key is the SHA-256 digest of the
//! seed and label, with the index selecting the ChaCha stream. Streams never
//! depend on how many draws another stream has made, so parallel workers get
//! the same numbers regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

fn key(seed: u64, label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}

/// Stream `0` for `(seed, label)`.
pub fn seeded_rng(seed: u64, label: &str) -> Rng {
    seeded_rng_indexed(seed, label, 0)
}

/// Stream `index` for `(seed, label)`.
pub fn seeded_rng_indexed(seed: u64, label: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::from_seed(key(seed, label));
    rng.set_stream(index);
    rng
}

/// Derives a child seed; used where an API takes a plain integer seed.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    seeded_rng_indexed(seed, label, index).next_u64()
}
