//! Per-trajectory random streams and Rademacher increments.
//!
//! Trajectory `i` under master seed `s` draws from ChaCha8 keyed by `s` on
//! stream `i`, so its increments never depend on which worker runs it.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::real::Real;

pub fn trajectory_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws ±1 components, one random bit each.
#[derive(Debug, Clone)]
pub struct Rademacher<R> {
    rng: R,
    bits: u64,
    remaining: u32,
}

impl<R: RngCore> Rademacher<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, bits: 0, remaining: 0 }
    }

    #[inline]
    fn next_bit(&mut self) -> bool {
        if self.remaining == 0 {
            self.bits = self.rng.next_u64();
            self.remaining = 64;
        }
        let bit = self.bits & 1 == 1;
        self.bits >>= 1;
        self.remaining -= 1;
        bit
    }

    #[inline]
    pub fn sign<T: Real>(&mut self) -> T {
        if self.next_bit() {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Vector of independent ±1 components.
    #[inline]
    pub fn vector<T: Real, const D: usize>(&mut self) -> [T; D] {
        std::array::from_fn(|_| self.sign())
    }
}
