//! Deterministic randomness keyed by sample identity.
//!
//! Every stochastic operation in the pipeline draws from a ChaCha8 stream
//! whose 256-bit key is a SHA-256 digest over the run seed, a short domain
//! tag naming the operation, an epoch counter, and the sample id. Two runs
//! with the same seed therefore make identical choices for a given sample no
//! matter how the input is ordered, chunked, or spread across workers.

use alloc::string::String;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(seed: u64, domain: &str, epoch: u64, id: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    // Length prefixes keep (domain, id) pairs unambiguous.
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update(epoch.to_le_bytes());
    hasher.update((id.len() as u64).to_le_bytes());
    hasher.update(id.as_bytes());
    let out = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&out);
    key
}

/// RNG for one (seed, operation, epoch, sample) tuple.
pub fn keyed_rng(seed: u64, domain: &str, epoch: u64, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(seed, domain, epoch, id))
}

/// Stable pseudo-random rank of an id under a seed. Sorting by
/// `(stable_rank, id)` yields the same permutation regardless of the order
/// ids are presented in.
pub fn stable_rank(seed: u64, domain: &str, id: &str) -> u64 {
    let key = digest(seed, domain, 0, id);
    u64::from_le_bytes(key[..8].try_into().expect("digest is 32 bytes"))
}

/// Hex digest of a UTF-8 payload, used to fingerprint configuration blobs.
pub fn sha256_hex(payload: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(payload);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out {
        use core::fmt::Write;
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}
