//! Keyed random streams.
//!
//! Every logical random draw owns a ChaCha stream whose seed is a hash of
//! `(master seed, purpose tag, index path)`. Results never depend on which
//! worker runs a replicate or in which order replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Builds the stream for `(seed, tag, path)`.
pub fn stream(seed: u64, tag: &str, path: &[u64]) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    for idx in path {
        hasher.update(idx.to_le_bytes());
    }
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Derives a child seed, for APIs that take a plain `u64` seed.
pub fn derive_seed(seed: u64, tag: &str, path: &[u64]) -> u64 {
    use rand::RngCore;
    stream(seed, tag, path).next_u64()
}
