//! Schedule-independent child seeds.

use sha2::{Digest, Sha256};

/// SHA-256 of `(master, x, trial, tag)`, truncated to 64 bits.
pub fn child_seed(master: u64, x: u64, trial: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(x.to_le_bytes());
    h.update(trial.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}
