//! FNV-1a hashing for feature buckets and seed derivation.
//!
//! The hash must be stable across platforms and releases: persisted models
//! embed feature indices produced by it, and synthetic corpora derive
//! per-sample RNG streams from it.

/// FNV-1a 64-bit offset basis.
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
/// FNV-1a 64-bit prime.
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Bucket index for a token under a fixed hash width.
pub fn token_bucket(token: &str, width: usize) -> usize {
    debug_assert!(width > 0);
    (fnv1a(token.as_bytes()) % width as u64) as usize
}

/// Mix a master seed with stream coordinates into a derived sub-seed.
///
/// Used to give every (domain, sample) or (iteration, prompt) pair its own
/// independent deterministic RNG stream.
pub fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut buf = [0u8; 24];
    buf[..8].copy_from_slice(&master.to_le_bytes());
    buf[8..16].copy_from_slice(&a.to_le_bytes());
    buf[16..].copy_from_slice(&b.to_le_bytes());
    fnv1a(&buf)
}
