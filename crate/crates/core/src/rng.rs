//! Seeded, counter-based random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream addressed by
//! `(master seed, stream index)`, so ensembles can be evaluated in any order
//! or in parallel and still reproduce bit for bit.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug)]
pub struct SimRng {
    inner: ChaCha8Rng,
    bits: u64,
    bits_left: u32,
}

impl SimRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            bits: 0,
            bits_left: 0,
        }
    }

    /// Stream for a sub-task of stream `stream`, e.g. the target draw of a trial.
    pub fn derived(seed: u64, stream: u64, lane: u64) -> Self {
        Self::new(seed ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15), stream)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// One fair coin flip; bits are drawn 64 at a time.
    #[inline]
    pub fn bit(&mut self) -> bool {
        if self.bits_left == 0 {
            self.bits = self.inner.next_u64();
            self.bits_left = 64;
        }
        let b = self.bits & 1 == 1;
        self.bits >>= 1;
        self.bits_left -= 1;
        b
    }

    /// Index drawn from a discrete distribution given by cumulative weights
    /// (last entry 1).
    #[inline]
    pub fn categorical(&mut self, cumulative: &[f64]) -> usize {
        let u = self.uniform();
        cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(cumulative.len() - 1)
    }
}
