//! Seeded uniform streams.
//!
//! Every random quantity in the crate is drawn from ChaCha8 (`rand_chacha`
//! 0.3, seeded with `seed_from_u64`). A uniform `f64` consumes exactly one
//! 64-bit output (53 high bits), so the k-th draw of a stream lives at a fixed
//! word position and any draw can be reproduced without replaying the stream.
//! That is what makes parallel and serial evaluation bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in run manifests.
pub const PRNG_ID: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64, 53-bit f64 draws)";

/// A seeded stream of uniforms on `[0,1)` with random access.
#[derive(Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Positions the stream so that the next draw is draw number `index` (0-based).
    pub fn seek(&mut self, index: u64) {
        // two 32-bit words per f64 draw
        self.rng.set_word_pos(u128::from(index) * 2);
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Fills `out` with draws `block * out.len() ..` of the stream.
    pub fn fill_block(&mut self, block: u64, out: &mut [f64]) {
        self.seek(block * out.len() as u64);
        for x in out.iter_mut() {
            *x = self.next_f64();
        }
    }
}

/// Derives an independent sub-seed, e.g. one per scale or per ball.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential_draws() {
        let mut seq = UniformStream::new(42);
        let draws: Vec<f64> = (0..50).map(|_| seq.next_f64()).collect();
        let mut ra = UniformStream::new(42);
        for k in [0u64, 7, 31, 49] {
            ra.seek(k);
            assert_eq!(ra.next_f64(), draws[k as usize]);
        }
        let mut block = [0.0; 5];
        ra.fill_block(3, &mut block);
        assert_eq!(&block[..], &draws[15..20]);
    }

    #[test]
    fn draws_are_in_unit_interval() {
        let mut s = UniformStream::new(0);
        for _ in 0..10_000 {
            let x = s.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }
}
