//! Interactive error reconciliation over the public channel.
//!
//! Implements the iterative block-parity protocol: a sampled error
//! estimate first, then several passes of block parities — natural order
//! once, seeded shuffles after — with binary search inside odd blocks and
//! backtracking through the blocks of earlier passes. Every parity bit
//! crosses the wire masked by one-time pad, so the public transcript
//! reveals structure (positions, block shapes, steering) but no key bits.

mod channel;
mod pad;

pub use channel::{decode_indices, encode_indices, ChannelLog, Link, Message, MessageKind, Side};
pub use pad::PadLedger;

use crate::gf2::BitVec;
use crate::seed::rng_for;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// Number of random-subset parities in the optional final confirmation.
pub const CONFIRM_SUBSETS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum CascadeError {
    #[error("one-time pad exhausted: {requested} more bits requested after {consumed} of {budget}")]
    PadExhausted {
        requested: usize,
        consumed: u64,
        budget: u64,
    },
    #[error("no message waiting for side {side}")]
    ChannelEmpty { side: Side },
    #[error("binary search started on a block with even mismatch parity (len {len})")]
    EvenMismatchParity { len: usize },
    #[error("malformed payload: {reason}")]
    MalformedPayload { reason: &'static str },
    #[error("invalid reconciliation config: {reason}")]
    Config { reason: String },
    #[error("strings differ in length: {alice} vs {bob}")]
    LengthMismatch { alice: usize, bob: usize },
    #[error("cannot reconcile an empty string")]
    Empty,
}

/// Tunable knobs of the reconciliation phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileConfig {
    pub pass_count: usize,
    /// Explicit per-pass block sizes; `None` sizes the first pass from the
    /// estimated error rate and doubles it each pass.
    pub block_sizes: Option<Vec<usize>>,
    /// Fraction of the sifted string disclosed for error estimation.
    pub estimation_fraction: f64,
    /// Seed for the per-pass shuffles and the confirmation subsets.
    pub shuffle_seed: u64,
    /// Exchange masked random-subset parities after the passes.
    pub final_confirmation: bool,
}

impl Default for ReconcileConfig {
    fn default() -> ReconcileConfig {
        ReconcileConfig {
            pass_count: 4,
            block_sizes: None,
            estimation_fraction: 0.1,
            shuffle_seed: 0,
            final_confirmation: false,
        }
    }
}

impl ReconcileConfig {
    pub fn validate(&self) -> Result<(), CascadeError> {
        if self.pass_count == 0 {
            return Err(CascadeError::Config {
                reason: "pass_count must be at least 1".into(),
            });
        }
        if !(0.0..1.0).contains(&self.estimation_fraction) {
            return Err(CascadeError::Config {
                reason: format!(
                    "estimation_fraction {} must lie in [0, 1)",
                    self.estimation_fraction
                ),
            });
        }
        if let Some(sizes) = &self.block_sizes {
            if sizes.len() != self.pass_count {
                return Err(CascadeError::Config {
                    reason: format!(
                        "{} block sizes given for {} passes",
                        sizes.len(),
                        self.pass_count
                    ),
                });
            }
            if sizes.contains(&0) {
                return Err(CascadeError::Config {
                    reason: "block sizes must be positive".into(),
                });
            }
        }
        Ok(())
    }

    /// Per-pass block sizes for a payload of `len` bits reconciled at
    /// estimated error rate `rate`.
    ///
    /// Automatic sizing starts near 0.73/rate (floored at a 1% rate so a
    /// clean estimate still yields finite blocks), clamps into
    /// [2, max(2, len/2)], then doubles each pass up to the payload size.
    /// Explicit sizes are used as given, capped at the payload size.
    pub fn resolved_block_sizes(&self, rate: f64, len: usize) -> Result<Vec<usize>, CascadeError> {
        self.validate()?;
        if let Some(sizes) = &self.block_sizes {
            return Ok(sizes.iter().map(|&k| k.min(len.max(1))).collect());
        }
        let first = (0.73 / rate.max(0.01)).ceil() as usize;
        let mut k = first.clamp(2, (len / 2).max(2));
        let mut sizes = Vec::with_capacity(self.pass_count);
        for _ in 0..self.pass_count {
            sizes.push(k);
            k = (k * 2).min(len.max(2));
        }
        Ok(sizes)
    }
}

/// Outcome of the sampled error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Sampled positions, ascending, as indices into the estimated string.
    pub sample_indices: Vec<usize>,
    /// How many sampled positions disagreed.
    pub mismatch: usize,
    /// The disagreeing sampled positions.
    pub mismatch_positions: Vec<usize>,
    /// mismatch / sample size; 0 when nothing was sampled.
    pub rate: f64,
    /// Pad bits the disclosure consumed (exactly the sample size).
    pub pad_consumed: u64,
}

/// Disclose a random sample under the pad and measure its disagreement.
///
/// The sampled positions and the mismatch pattern are public; the sampled
/// bits themselves cross the wire masked. Callers must drop the sampled
/// positions from the strings before reconciling the remainder.
pub fn estimate_error_rate(
    alice: &BitVec,
    bob: &BitVec,
    sample_size: usize,
    sample_rng: &mut impl Rng,
    link: &mut Link,
) -> Result<EstimateReport, CascadeError> {
    if alice.len() != bob.len() {
        return Err(CascadeError::LengthMismatch {
            alice: alice.len(),
            bob: bob.len(),
        });
    }
    if sample_size > alice.len() {
        return Err(CascadeError::Config {
            reason: format!(
                "cannot sample {sample_size} of {} positions",
                alice.len()
            ),
        });
    }
    let mut indices = rand::seq::index::sample(sample_rng, alice.len(), sample_size).into_vec();
    indices.sort_unstable();
    link.send_clear(
        Side::Alice,
        MessageKind::SampleIndices,
        encode_indices(&indices),
    );
    link.send_masked(Side::Alice, MessageKind::SampleBits, alice.select(&indices))?;
    let announced = decode_indices(&link.receive(Side::Bob)?.payload)?;
    let alice_sample = link.receive(Side::Bob)?.payload;
    let mismatch_mask = alice_sample.xor(&bob.select(&announced));
    link.send_clear(Side::Bob, MessageKind::SampleMismatch, mismatch_mask.clone());
    let _ = link.receive(Side::Alice)?;
    let mismatch_positions: Vec<usize> = (0..mismatch_mask.len())
        .filter(|&j| mismatch_mask.get(j))
        .map(|j| announced[j])
        .collect();
    let mismatch = mismatch_positions.len();
    let rate = if sample_size == 0 {
        0.0
    } else {
        mismatch as f64 / sample_size as f64
    };
    Ok(EstimateReport {
        sample_indices: indices,
        mismatch,
        mismatch_positions,
        rate,
        pad_consumed: sample_size as u64,
    })
}

/// Locate one defect inside `positions`, a block with odd mismatch
/// parity, by interactive halving.
///
/// Costs exactly ceil(log2(len)) + 1 masked parity bits: a whole-block
/// confirmation first, then one half-parity per halving step. Returns the
/// defect position; fails with [`CascadeError::EvenMismatchParity`] if
/// the confirmation finds the block even.
pub fn binary_search_error(
    positions: &[usize],
    alice: &BitVec,
    bob: &BitVec,
    link: &mut Link,
) -> Result<usize, CascadeError> {
    assert!(!positions.is_empty(), "a search block cannot be empty");
    link.send_clear(
        Side::Bob,
        MessageKind::SearchBlock,
        encode_indices(positions),
    );
    let block = decode_indices(&link.receive(Side::Alice)?.payload)?;
    link.send_masked(
        Side::Alice,
        MessageKind::BlockParity,
        BitVec::from_bools(&[alice.select(&block).parity()]),
    )?;
    let alice_parity = link.receive(Side::Bob)?.payload.get(0);
    if alice_parity == bob.select(positions).parity() {
        return Err(CascadeError::EvenMismatchParity {
            len: positions.len(),
        });
    }
    // Both sides now walk the same segment, which always has odd mismatch
    // parity; the left half takes the extra element on odd splits.
    let mut alice_segment = block;
    let mut bob_segment = positions.to_vec();
    while bob_segment.len() > 1 {
        let mid = bob_segment.len().div_ceil(2);
        link.send_masked(
            Side::Alice,
            MessageKind::HalfParity,
            BitVec::from_bools(&[alice.select(&alice_segment[..mid]).parity()]),
        )?;
        let left_parity = link.receive(Side::Bob)?.payload.get(0);
        let go_right = left_parity == bob.select(&bob_segment[..mid]).parity();
        link.send_clear(Side::Bob, MessageKind::Steer, BitVec::from_bools(&[go_right]));
        let steer = link.receive(Side::Alice)?.payload.get(0);
        alice_segment = if steer {
            alice_segment[mid..].to_vec()
        } else {
            alice_segment[..mid].to_vec()
        };
        bob_segment = if go_right {
            bob_segment[mid..].to_vec()
        } else {
            bob_segment[..mid].to_vec()
        };
    }
    let defect = bob_segment[0];
    link.send_clear(Side::Bob, MessageKind::ErrorAt, encode_indices(&[defect]));
    let _ = link.receive(Side::Alice)?;
    Ok(defect)
}

/// What reconciliation reports back.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileReport {
    /// Positions corrected in Bob's string.
    pub error_positions: BTreeSet<usize>,
    /// Masked parity bits exchanged: pass tables, searches, confirmation.
    pub parities_exchanged: u64,
    /// Link-lifetime pad consumption once reconciliation finished.
    pub pad_consumed: u64,
    /// The rate block sizing was based on.
    pub estimated_rate: f64,
    /// True disagreement remaining afterwards.
    pub residual_mismatch: usize,
    /// Result of the optional masked confirmation exchange.
    pub confirmation: Option<bool>,
}

struct PassState {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    /// Current mismatch parity per block: Alice's announced parity XOR
    /// Bob's evolving one.
    mismatch: Vec<bool>,
}

/// Correct Bob's string toward Alice's.
///
/// Runs the configured passes; whenever a correction flips the mismatch
/// parity of a block in another pass, that block joins the work queue,
/// smallest blocks first. Alice's string is never modified.
pub fn reconcile(
    alice: &BitVec,
    bob: &mut BitVec,
    estimated_rate: f64,
    config: &ReconcileConfig,
    link: &mut Link,
) -> Result<ReconcileReport, CascadeError> {
    config.validate()?;
    if alice.len() != bob.len() {
        return Err(CascadeError::LengthMismatch {
            alice: alice.len(),
            bob: bob.len(),
        });
    }
    if alice.is_empty() {
        return Err(CascadeError::Empty);
    }
    let len = alice.len();
    let sizes = config.resolved_block_sizes(estimated_rate, len)?;
    let pad_before = link.pad_consumed();
    let mut error_positions = BTreeSet::new();
    let mut passes: Vec<PassState> = Vec::with_capacity(sizes.len());
    // (block length, pass, block index), so iteration drains small blocks
    // first
    let mut work: BTreeSet<(usize, usize, usize)> = BTreeSet::new();

    for (pass_idx, &size) in sizes.iter().enumerate() {
        let mut order: Vec<usize> = (0..len).collect();
        if pass_idx > 0 {
            // shuffle generator tag = 1-based pass number; tag 0 is
            // reserved for the confirmation subsets
            order.shuffle(&mut rng_for(config.shuffle_seed, pass_idx as u64 + 1));
        }
        let blocks: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
        let mut block_of = vec![0usize; len];
        for (bi, blk) in blocks.iter().enumerate() {
            for &p in blk {
                block_of[p] = bi;
            }
        }
        let alice_parities: BitVec = blocks.iter().map(|blk| alice.select(blk).parity()).collect();
        link.send_masked(Side::Alice, MessageKind::PassParities, alice_parities)?;
        let announced = link.receive(Side::Bob)?.payload;
        let mismatch: Vec<bool> = blocks
            .iter()
            .enumerate()
            .map(|(bi, blk)| announced.get(bi) != bob.select(blk).parity())
            .collect();
        for (bi, &odd) in mismatch.iter().enumerate() {
            if odd {
                work.insert((blocks[bi].len(), pass_idx, bi));
            }
        }
        passes.push(PassState {
            blocks,
            block_of,
            mismatch,
        });

        while let Some(&(blen, p, b)) = work.iter().next() {
            work.remove(&(blen, p, b));
            if !passes[p].mismatch[b] {
                continue;
            }
            let defect = binary_search_error(&passes[p].blocks[b], alice, bob, link)?;
            bob.flip(defect);
            error_positions.insert(defect);
            for (q, state) in passes.iter_mut().enumerate() {
                let qb = state.block_of[defect];
                state.mismatch[qb] = !state.mismatch[qb];
                let key = (state.blocks[qb].len(), q, qb);
                if state.mismatch[qb] {
                    work.insert(key);
                } else {
                    work.remove(&key);
                }
            }
        }
    }

    let confirmation = if config.final_confirmation {
        let mut rng = rng_for(config.shuffle_seed, 0);
        let masks: Vec<BitVec> = (0..CONFIRM_SUBSETS)
            .map(|_| BitVec::random(len, &mut rng))
            .collect();
        let alice_parities: BitVec = masks.iter().map(|mask| alice.dot(mask)).collect();
        link.send_masked(Side::Alice, MessageKind::Confirm, alice_parities)?;
        let announced = link.receive(Side::Bob)?.payload;
        let bob_parities: BitVec = masks.iter().map(|mask| bob.dot(mask)).collect();
        let agreed = announced == bob_parities;
        link.send_clear(
            Side::Bob,
            MessageKind::ConfirmResult,
            BitVec::from_bools(&[agreed]),
        );
        let _ = link.receive(Side::Alice)?;
        Some(agreed)
    } else {
        None
    };

    Ok(ReconcileReport {
        error_positions,
        parities_exchanged: link.pad_consumed() - pad_before,
        pad_consumed: link.pad_consumed(),
        estimated_rate,
        residual_mismatch: alice.xor(bob).weight(),
        confirmation,
    })
}
