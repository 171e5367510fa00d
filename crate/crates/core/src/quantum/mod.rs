//! Bell-pair source and measurement layer.
//!
//! Models the quantum part of a session exactly: the four Bell states,
//! their correlation structure in the two conjugate measurement bases,
//! exact joint-outcome amplitudes, and per-pair sampling for ideal, noisy,
//! scripted, and intercepted sources.

mod amplitude;

pub use amplitude::{Amplitude, Dyadic};

use crate::gf2::BitVec;
use rand::Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("{name} = {value} is not a probability")]
    Probability { name: &'static str, value: f64 },
    #[error("source distribution sums to {sum}, expected 1")]
    Distribution { sum: f64 },
    #[error("scripted source provides {got} states but {need} are needed")]
    ScriptTooShort { need: usize, got: usize },
    #[error("{state} is anticorrelated in the {basis} basis; its sign bit is undefined")]
    GammaUndefined { state: BellState, basis: Basis },
    #[error("unknown {what}: {text:?}")]
    Parse { what: &'static str, text: String },
}

/// One of the two conjugate single-qubit measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Plus,
    Times,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Plus, Basis::Times];
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Plus => "+",
            Basis::Times => "x",
        })
    }
}

impl FromStr for Basis {
    type Err = QuantumError;

    fn from_str(s: &str) -> Result<Basis, QuantumError> {
        match s {
            "+" | "plus" => Ok(Basis::Plus),
            "x" | "times" => Ok(Basis::Times),
            _ => Err(QuantumError::Parse {
                what: "basis",
                text: s.to_string(),
            }),
        }
    }
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellState::PhiPlus => 0,
            BellState::PhiMinus => 1,
            BellState::PsiPlus => 2,
            BellState::PsiMinus => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<BellState> {
        BellState::ALL.get(i).copied()
    }

    /// The two states whose halves give equal outcomes when both are
    /// measured in `basis`.
    pub fn correlated_in(basis: Basis) -> [BellState; 2] {
        match basis {
            Basis::Plus => [BellState::PhiPlus, BellState::PhiMinus],
            Basis::Times => [BellState::PhiPlus, BellState::PsiPlus],
        }
    }

    /// The two states whose halves give opposite outcomes in `basis`.
    pub fn anticorrelated_in(basis: Basis) -> [BellState; 2] {
        match basis {
            Basis::Plus => [BellState::PsiPlus, BellState::PsiMinus],
            Basis::Times => [BellState::PhiMinus, BellState::PsiMinus],
        }
    }

    /// Sign bit γ: for a state correlated in `basis`, the amplitude of the
    /// equal outcome (α, α) is (-1)^(α·γ)/√2. `None` when anticorrelated.
    pub fn gamma_in(self, basis: Basis) -> Option<bool> {
        match (basis, self) {
            (Basis::Plus, BellState::PhiPlus) => Some(false),
            (Basis::Plus, BellState::PhiMinus) => Some(true),
            (Basis::Times, BellState::PhiPlus) => Some(false),
            (Basis::Times, BellState::PsiPlus) => Some(true),
            _ => None,
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellState {
    type Err = QuantumError;

    fn from_str(s: &str) -> Result<BellState, QuantumError> {
        match s {
            "phi+" => Ok(BellState::PhiPlus),
            "phi-" => Ok(BellState::PhiMinus),
            "psi+" => Ok(BellState::PsiPlus),
            "psi-" => Ok(BellState::PsiMinus),
            _ => Err(QuantumError::Parse {
                what: "bell state",
                text: s.to_string(),
            }),
        }
    }
}

/// Expansion of each Bell state (in [`BellState::ALL`] order) over the
/// Plus ⊗ Plus product basis: two terms (first bit, second bit, sign),
/// sharing an overall coefficient of 1/√2.
const EXPANSION: [[(bool, bool, i64); 2]; 4] = [
    [(false, false, 1), (true, true, 1)],
    [(false, false, 1), (true, true, -1)],
    [(false, true, 1), (true, false, 1)],
    [(false, true, 1), (true, false, -1)],
];

/// Single-qubit overlap ⟨`outcome` in `measure` | `bit` in `prep`⟩.
///
/// Equal bases give a Kronecker delta; conjugate bases give
/// (-1)^(outcome·bit)/√2.
pub fn qubit_overlap(outcome: bool, measure: Basis, bit: bool, prep: Basis) -> Amplitude {
    if measure == prep {
        if outcome == bit {
            Amplitude::ONE
        } else {
            Amplitude::ZERO
        }
    } else {
        Amplitude::new(if outcome && bit { -1 } else { 1 }, 1)
    }
}

/// Exact joint amplitude for outcome (`a_bit`, `b_bit`) when the two
/// halves of `state` are measured in `a_basis` and `b_basis`.
pub fn bell_overlap(
    state: BellState,
    a_basis: Basis,
    b_basis: Basis,
    a_bit: bool,
    b_bit: bool,
) -> Amplitude {
    EXPANSION[state.index()]
        .iter()
        .map(|&(u, v, sign)| {
            qubit_overlap(a_bit, a_basis, u, Basis::Plus)
                * qubit_overlap(b_bit, b_basis, v, Basis::Plus)
                * Amplitude::new(sign, 0)
        })
        .fold(Amplitude::ZERO, |acc, term| acc + term)
        * Amplitude::new(1, 1)
}

/// Probabilities of the four joint outcomes, in order
/// (0,0), (0,1), (1,0), (1,1).
///
/// Computed from the correlation-set structure: equal bases give equal or
/// opposite outcomes with probability 1/2 each depending on membership,
/// and unequal bases give the uniform distribution. The amplitude route
/// in [`bell_overlap`] reproduces this table independently; tests hold
/// the two together.
pub fn outcome_dist(state: BellState, a_basis: Basis, b_basis: Basis) -> [Dyadic; 4] {
    let half = Dyadic::new(1, 1);
    if a_basis == b_basis {
        if BellState::correlated_in(a_basis).contains(&state) {
            [half, Dyadic::ZERO, Dyadic::ZERO, half]
        } else {
            [Dyadic::ZERO, half, half, Dyadic::ZERO]
        }
    } else {
        [Dyadic::new(1, 2); 4]
    }
}

/// Sample a joint outcome from [`outcome_dist`], consuming one uniform
/// draw and walking the outcomes in their listed order.
pub fn sample_outcome(
    state: BellState,
    a_basis: Basis,
    b_basis: Basis,
    rng: &mut impl Rng,
) -> (bool, bool) {
    let dist = outcome_dist(state, a_basis, b_basis);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in dist.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return (k & 2 != 0, k & 1 != 0);
        }
    }
    (true, true)
}

/// Sign-bit string γ for a run of pairwise-measured states, satisfying
/// amplitude(α, α) = (-1)^(α·γ)/√2^r for every outcome string α.
///
/// Fails if any state is anticorrelated in `basis`.
pub fn gamma_of(states: &[BellState], basis: Basis) -> Result<BitVec, QuantumError> {
    states
        .iter()
        .map(|&state| {
            state
                .gamma_in(basis)
                .ok_or(QuantumError::GammaUndefined { state, basis })
        })
        .collect()
}

/// What the pair source emits on each use.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    /// Perfect Φ+ pairs.
    Ideal,
    /// Independent draws from a Bell-diagonal mixture; weights follow
    /// [`BellState::ALL`] order.
    IidBellDiagonal { probs: [f64; 4] },
    /// A fixed sequence of states, consumed in transmission order.
    Scripted { states: Vec<BellState> },
    /// Perfect pairs with an intercept-resend attacker: each pair is
    /// independently captured with probability `intercept_prob`, measured
    /// in a random basis, and replaced by the attacker's product state.
    InterceptResend { intercept_prob: f64 },
}

impl SourceModel {
    pub fn validate(&self) -> Result<(), QuantumError> {
        match self {
            SourceModel::Ideal | SourceModel::Scripted { .. } => Ok(()),
            SourceModel::IidBellDiagonal { probs } => {
                for &p in probs {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(QuantumError::Probability {
                            name: "bell-diagonal weight",
                            value: p,
                        });
                    }
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(QuantumError::Distribution { sum });
                }
                Ok(())
            }
            SourceModel::InterceptResend { intercept_prob } => {
                if !(0.0..=1.0).contains(intercept_prob) {
                    return Err(QuantumError::Probability {
                        name: "intercept_prob",
                        value: *intercept_prob,
                    });
                }
                Ok(())
            }
        }
    }
}

/// One intercepted pair: its position, the attacker's basis, and the bit
/// the attacker observed (and resent).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EveTap {
    pub index: usize,
    pub basis: Basis,
    pub outcome: bool,
}

/// Everything the two stations record while measuring a transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub alice_bases: Vec<Basis>,
    pub bob_bases: Vec<Basis>,
    pub alice_bits: BitVec,
    pub bob_bits: BitVec,
    /// Present exactly when the source models an attacker; empty if she
    /// never fired.
    pub eve_taps: Option<Vec<EveTap>>,
}

impl MeasurementRecord {
    pub fn len(&self) -> usize {
        self.alice_bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_bases.is_empty()
    }
}

fn random_basis(rng: &mut impl Rng) -> Basis {
    if rng.random() {
        Basis::Times
    } else {
        Basis::Plus
    }
}

fn draw_state(probs: &[f64; 4], rng: &mut impl Rng) -> BellState {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return BellState::from_index(k).expect("index from a length-4 walk");
        }
    }
    BellState::PsiMinus
}

/// Measure `n` pairs from `source`.
///
/// Per pair the draws happen in a fixed order — Alice's basis, Bob's
/// basis, then the source's own randomness — so a record is reproducible
/// from the generator state alone.
pub fn sample_transmission(
    source: &SourceModel,
    n: usize,
    rng: &mut impl Rng,
) -> Result<MeasurementRecord, QuantumError> {
    source.validate()?;
    if let SourceModel::Scripted { states } = source {
        if states.len() < n {
            return Err(QuantumError::ScriptTooShort {
                need: n,
                got: states.len(),
            });
        }
    }
    let mut alice_bases = Vec::with_capacity(n);
    let mut bob_bases = Vec::with_capacity(n);
    let mut alice_bits = BitVec::zeros(n);
    let mut bob_bits = BitVec::zeros(n);
    let mut eve_taps = match source {
        SourceModel::InterceptResend { .. } => Some(Vec::new()),
        _ => None,
    };
    for i in 0..n {
        let a = random_basis(rng);
        let b = random_basis(rng);
        let (x, y) = match source {
            SourceModel::Ideal => sample_outcome(BellState::PhiPlus, a, b, rng),
            SourceModel::IidBellDiagonal { probs } => {
                sample_outcome(draw_state(probs, rng), a, b, rng)
            }
            SourceModel::Scripted { states } => sample_outcome(states[i], a, b, rng),
            SourceModel::InterceptResend { intercept_prob } => {
                if rng.random_bool(*intercept_prob) {
                    // Both halves of a perfect pair agree in her basis, so
                    // the attacker sees a single uniform bit and resends
                    // its product state to both stations.
                    let basis = random_basis(rng);
                    let outcome: bool = rng.random();
                    eve_taps.as_mut().expect("tap log exists").push(EveTap {
                        index: i,
                        basis,
                        outcome,
                    });
                    let x = if a == basis { outcome } else { rng.random() };
                    let y = if b == basis { outcome } else { rng.random() };
                    (x, y)
                } else {
                    sample_outcome(BellState::PhiPlus, a, b, rng)
                }
            }
        };
        alice_bases.push(a);
        bob_bases.push(b);
        alice_bits.set(i, x);
        bob_bits.set(i, y);
    }
    Ok(MeasurementRecord {
        alice_bases,
        bob_bases,
        alice_bits,
        bob_bits,
        eve_taps,
    })
}
