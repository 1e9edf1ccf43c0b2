//! Seeded initial distributions.
//!
//! Draws come from the ChaCha20 block function used in counter mode: the
//! 256-bit key is the 64-bit seed in little-endian order followed by 24 zero
//! bytes, the nonce is zero and the 64-bit block counter starts at zero. Each
//! draw consumes one 64-bit word `w` of the keystream (little-endian) and maps
//! it to `[0, 1)` as `(w >> 11) * 2^-53`. Coordinates are drawn token-major
//! (all coordinates of token 0, then token 1, ...). The construction uses only
//! integer arithmetic and one exact float scaling, so the same seed produces
//! the same bits on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{invalid, Result};
use crate::state::TokenConfiguration;

/// Stream of uniform `[0, 1)` doubles keyed by a 64-bit seed.
pub struct UniformStream {
    rng: ChaCha20Rng,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Self {
            rng: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}

/// `n` tokens drawn uniformly from the box `[lo, hi]^d`.
pub fn uniform_box(n: usize, d: usize, lo: f64, hi: f64, seed: u64) -> Result<TokenConfiguration> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(
            "init.box",
            format!("need finite lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let mut stream = UniformStream::new(seed);
    let states = (0..n * d).map(|_| stream.next_in(lo, hi)).collect();
    TokenConfiguration::from_flat(n, d, states, 0)
}

/// Like [`uniform_box`] with per-axis bounds `ranges[k] = (lo_k, hi_k)`.
pub fn uniform_rect(n: usize, ranges: &[(f64, f64)], seed: u64) -> Result<TokenConfiguration> {
    for &(lo, hi) in ranges {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(
                "init.box",
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
    }
    let mut stream = UniformStream::new(seed);
    let mut states = Vec::with_capacity(n * ranges.len());
    for _ in 0..n {
        for &(lo, hi) in ranges {
            states.push(stream.next_in(lo, hi));
        }
    }
    TokenConfiguration::from_flat(n, ranges.len(), states, 0)
}
