//! One-time-pad accounting.

use super::CascadeError;
use crate::gf2::BitVec;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A budgeted stream of shared pad bits.
///
/// Both endpoints build one from the same seed; the streams stay aligned
/// because every masked exchange draws the same number of bits on the
/// sending and the receiving side, in wire order.
#[derive(Debug, Clone)]
pub struct PadLedger {
    rng: ChaCha8Rng,
    consumed: u64,
    budget: u64,
}

impl PadLedger {
    pub fn new(seed: u64, budget: u64) -> PadLedger {
        PadLedger {
            rng: ChaCha8Rng::seed_from_u64(seed),
            consumed: 0,
            budget,
        }
    }

    /// Take the next `len` pad bits, or fail without consuming anything.
    pub fn draw(&mut self, len: usize) -> Result<BitVec, CascadeError> {
        if self.consumed + len as u64 > self.budget {
            return Err(CascadeError::PadExhausted {
                requested: len,
                consumed: self.consumed,
                budget: self.budget,
            });
        }
        self.consumed += len as u64;
        Ok(BitVec::random(len, &mut self.rng))
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.consumed
    }
}
