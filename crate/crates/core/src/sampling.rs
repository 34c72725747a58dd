//! Deterministic seeded sampling.
//!
//! Every random draw in the crate goes through [`seeded`]. Work that is split
//! across threads derives one generator per chunk with [`derive_seed`], so a
//! result never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `master ^ stream`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits `n` draws into chunks of at most `chunk` and pairs each with its
/// derived seed.
pub fn chunked_streams(master: u64, n: usize, chunk: usize) -> Vec<(u64, usize)> {
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .map(|i| {
            let len = chunk.min(n - i * chunk);
            (derive_seed(master, i as u64), len)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<f64> = (0..8).map(|_| 0.0).scan(seeded(7), |r, _| Some(r.random())).collect();
        let b: Vec<f64> = (0..8).map(|_| 0.0).scan(seeded(7), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_eq!(derive_seed(3, 9), derive_seed(3, 9));
    }

    #[test]
    fn chunks_cover_all_draws() {
        let streams = chunked_streams(1, 10_001, 1000);
        assert_eq!(streams.len(), 11);
        assert_eq!(streams.iter().map(|s| s.1).sum::<usize>(), 10_001);
        assert!(chunked_streams(1, 0, 10).is_empty());
    }
}
