//! Deterministic random-stream derivation.
//!
//! Every stage seed is an explicit integer; substreams are derived by hashing
//! the seed together with a label path, so per-item randomness is independent
//! of iteration order and identical across platforms and runs.

use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive an independent RNG for `(seed, labels...)`.
///
/// The same `(seed, labels)` always yields the same stream; distinct label
/// paths yield statistically independent streams.
pub fn derive_rng(seed: u64, labels: &[&str]) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    rand::SeedableRng::from_seed(key)
}

/// Stable 16-hex-digit fingerprint for `(seed, labels...)`, used where a
/// deterministic pseudo-random *decision* (not a stream) is needed.
pub fn derive_fingerprint(seed: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
