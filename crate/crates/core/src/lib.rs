//! Simulator for entangled-pair quantum key distribution.
//!
//! The crate is organized bottom-up:
//!
//! * [`gf2`]: packed bit vectors, dense GF(2) matrices, minimum
//!   row-combination weight, and rejection-sampled compression matrices.
//! * [`bounds`]: binary entropy, smoothing exponent, entropy lower bound,
//!   parameter derivation, and the net-gain feasibility margin.
//! * [`quantum`]: Bell states, measurement bases, exact overlap amplitudes,
//!   and seeded sampling of pair transmissions under several source models.
//! * [`cascade`]: the interactive error-rate estimate and multi-pass block
//!   reconciliation over a logged channel, with every disclosed parity
//!   masked by a shared pad stream.
//! * [`protocol`]: sifting, validation, privacy amplification, and the
//!   end-to-end session driver.
//!
//! Everything random is driven by explicit seeded generators so that any
//! session, sweep, or generated matrix reproduces bit-for-bit from its seed.

pub mod bounds;
pub mod cascade;
pub mod gf2;
pub mod protocol;
pub mod quantum;
pub mod seed;
