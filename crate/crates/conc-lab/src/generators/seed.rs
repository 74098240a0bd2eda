//! Counter-based stream derivation. Every (stream, trial, column) triple gets
//! its own ChaCha8 generator keyed by a SplitMix64 finalizer chain, so trials
//! and columns can be generated in any order (or in parallel) and still
//! reproduce bit-exactly.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SALT: u64 = 0x243F_6A88_85A3_08D3;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the generator for one (master, stream, trial, column) cell.
pub fn stream_rng(master_seed: u64, stream: u64, trial: u64, column: u64) -> ChaCha8Rng {
    let h = mix(mix(mix(mix(master_seed ^ SALT) ^ stream) ^ trial) ^ column);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&mix(h ^ (i as u64 + 1)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
