//! Stable hashing and seeded stream derivation.
//!
//! Every random decision in the pipeline flows from a named seed through
//! `derive_rng(seed, parts)`, and every stable identifier is a content hash.
//! SHA-256 keeps both independent of the process, the platform, and the
//! standard library's hasher internals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// 64-bit stable hash of length-prefixed string parts.
pub fn stable_hash64(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// 16-hex-char stable identifier for the same parts.
pub fn stable_hex(parts: &[&str]) -> String {
    format!("{:016x}", stable_hash64(parts))
}

/// Maps the parts to [0, 1) uniformly; used for hash-threshold splitting.
pub fn unit_fraction(parts: &[&str]) -> f64 {
    stable_hash64(parts) as f64 / 18_446_744_073_709_551_616.0
}

/// Derives an independent RNG stream from (seed, purpose label, entity ids).
pub fn derive_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let seed_str = seed.to_string();
    let mut all: Vec<&str> = Vec::with_capacity(parts.len() + 1);
    all.push(&seed_str);
    all.extend_from_slice(parts);
    ChaCha8Rng::seed_from_u64(stable_hash64(&all))
}

/// SHA-256 hex digest of a byte buffer; used for artifact checksums.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
