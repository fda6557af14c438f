//! Hierarchical seed derivation.
//!
//! A seed is the first eight bytes (little endian) of
//! `SHA-256(parent_le_bytes || for each index: index_le_bytes || label_utf8)`.
//! The derivation depends only on these bytes, so derived seeds are stable
//! across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(parent: u64, indices: &[u64], label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    for i in indices {
        hasher.update(i.to_le_bytes());
    }
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed for run `run` of sweep row `cell`. Variants of the same row share
/// it so with/without-HFT runs are paired.
pub fn run_seed(master: u64, cell: u64, run: u64) -> u64 {
    derive_seed(master, &[cell, run], "run")
}

pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, &[], name))
}

/// Independent random streams for one simulation run. Normal-agent
/// randomness never depends on whether the HFT is present.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub init: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub learning: ChaCha8Rng,
    pub order_price: ChaCha8Rng,
    pub participation: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            init: stream(seed, "init"),
            noise: stream(seed, "noise"),
            learning: stream(seed, "learning"),
            order_price: stream(seed, "order_price"),
            participation: stream(seed, "participation"),
        }
    }
}
