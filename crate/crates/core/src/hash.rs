//! Short digests for frame verification and file checksums.

use sha2::{Digest, Sha256};

use crate::gf::Symbol;

/// Identifier written next to every digest produced here.
pub const DIGEST_ALGORITHM: &str = "sha256-64";

/// First eight bytes of SHA-256, big endian.
pub fn digest64(bytes: &[u8]) -> u64 {
    let full = Sha256::digest(bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&full[..8]);
    u64::from_be_bytes(head)
}

/// Digest of a symbol sequence, one byte per symbol.
pub fn hash_symbols(symbols: &[Symbol]) -> u64 {
    digest64(symbols)
}
