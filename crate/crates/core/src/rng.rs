//! Counter-based RNG stream derivation.
//!
//! Every random draw in the library comes from a ChaCha stream keyed by a
//! master seed and a path of counters (trial, stage, iteration, ...), so
//! results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of counters into a new 64-bit key.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x5EED_F00D_B05E_0F1C);
    for (depth, &p) in path.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64) << 56)));
    }
    h
}

/// A ChaCha20 generator for the stream `path` under `seed`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha20Rng {
    let key = derive_seed(seed, path);
    let mut bytes = [0u8; 32];
    let mut h = key;
    for chunk in bytes.chunks_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha20Rng::from_seed(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        let d: u64 = stream(8, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
