//! Per-path random streams.
//!
//! A path's generator is a ChaCha8 instance whose key depends on the master
//! seed and a noise tag and whose stream number is the path index. Two
//! ensembles simulated with the same seed and tag therefore see identical
//! Brownian increments path by path, whatever the worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies a Brownian increment stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseTag(pub u64);

impl NoiseTag {
    /// Reserved for initial-condition sampling, so coupled ensembles start
    /// from the same points.
    pub const INITIAL: NoiseTag = NoiseTag(0);
    pub const SHARED: NoiseTag = NoiseTag(1);
    pub const AVERAGED: NoiseTag = NoiseTag(2);
}

fn key(master_seed: u64, tag: NoiseTag) -> [u8; 32] {
    let mut derive = ChaCha8Rng::seed_from_u64(master_seed);
    derive.set_stream(tag.0);
    let mut k = [0u8; 32];
    derive.fill_bytes(&mut k);
    k
}

/// Factory for the per-path generators of one `(seed, tag)` pair.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    key: [u8; 32],
}

impl StreamFamily {
    pub fn new(master_seed: u64, tag: NoiseTag) -> Self {
        StreamFamily { key: key(master_seed, tag) }
    }

    pub fn path(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index as u64);
        rng
    }
}

/// Sub-seed for the `index`-th run of an experiment that draws many
/// independent ensembles from one master seed.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    // Stream numbers below 2⁶³ are left to noise tags.
    rng.set_stream((1 << 63) | index);
    rng.next_u64()
}
