//! Session orchestration: sifting, estimation, reconciliation, the strict
//! validation test, privacy amplification, and the public transcript.

use crate::bounds::{ceil_snapped, snapped, ProtocolParams};
use crate::cascade::{
    estimate_error_rate, reconcile, CascadeError, ChannelLog, EstimateReport, Link,
    ReconcileConfig, ReconcileReport,
};
use crate::gf2::{BitMatrix, BitVec, Gf2Error};
use crate::quantum::{sample_transmission, Basis, MeasurementRecord, QuantumError, SourceModel};
use crate::seed::{mix, rng_for, tag};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("matrix is {rows}x{cols} but parameters need {m}x{r}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        m: usize,
        r: usize,
    },
    #[error("estimation fraction {0} must lie in [0, 1)")]
    EstimationFraction(f64),
    #[error("pad budget must be positive")]
    ZeroPadBudget,
    #[error("sifting needs {want} matching pairs but only {got} arrived")]
    SiftShortfall { want: usize, got: usize },
    #[error("reconciled set needs {need} survivors but only {got} remain")]
    ReconciledShortfall { need: usize, got: usize },
    #[error("malformed announcement: {reason}")]
    Announcement { reason: &'static str },
    #[error("invalid configuration: {reason}")]
    Config { reason: String },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Smallest extended sift size L with L − ceil(fraction·L) ≥ s, so that
/// after the estimation sample is removed exactly the working size
/// survives at minimal cost.
pub fn sifted_budget(s: usize, fraction: f64) -> Result<usize, ProtocolError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(ProtocolError::EstimationFraction(fraction));
    }
    let sample_of = |l: usize| ceil_snapped(fraction * l as f64) as usize;
    let mut hi = s.max(1);
    while hi - sample_of(hi) < s {
        hi *= 2;
    }
    let mut lo = s;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid - sample_of(mid) >= s {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

/// Result of basis sifting: the first `want` matching positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Sifted {
    pub alice: BitVec,
    pub bob: BitVec,
    /// Pair indices retained, in transmission order.
    pub positions: Vec<usize>,
    /// Matching pairs available in total, kept or not.
    pub matching_total: usize,
}

/// Keep the first `want` pairs measured in agreeing bases.
pub fn sift(record: &MeasurementRecord, want: usize) -> Result<Sifted, ProtocolError> {
    let matching: Vec<usize> = (0..record.len())
        .filter(|&i| record.alice_bases[i] == record.bob_bases[i])
        .collect();
    if matching.len() < want {
        return Err(ProtocolError::SiftShortfall {
            want,
            got: matching.len(),
        });
    }
    let positions = matching[..want].to_vec();
    Ok(Sifted {
        alice: record.alice_bits.select(&positions),
        bob: record.bob_bits.select(&positions),
        positions,
        matching_total: matching.len(),
    })
}

/// Strict acceptance test: the observed error count must fall strictly
/// below ε·s. The threshold is snapped before comparing so that exact
/// boundary points (ε·s integral) are judged exactly.
pub fn validate_error_count(errors: usize, epsilon: f64, s: usize) -> bool {
    (errors as f64) < snapped(epsilon * s as f64)
}

/// The first `r` positions of S − E, in S's order. Coordinates are
/// whatever the caller uses for both arguments.
pub fn reconciled_set(
    s_positions: &[usize],
    corrected: &BTreeSet<usize>,
    r: usize,
) -> Result<Vec<usize>, ProtocolError> {
    let survivors: Vec<usize> = s_positions
        .iter()
        .copied()
        .filter(|p| !corrected.contains(p))
        .take(r)
        .collect();
    if survivors.len() < r {
        return Err(ProtocolError::ReconciledShortfall {
            need: r,
            got: survivors.len(),
        });
    }
    Ok(survivors)
}

/// Compress a reconciled string into the final key.
pub fn privacy_amplify(matrix: &BitMatrix, reconciled: &BitVec) -> Result<BitVec, Gf2Error> {
    matrix.matvec(reconciled)
}

/// Two independent uniform m-bit keys, issued when a session cannot
/// certify a shared one: the stations stay operational but hold keys that
/// agree only by coincidence.
pub fn fallback_key(m: usize, session_seed: u64) -> (BitVec, BitVec) {
    (
        BitVec::random(m, &mut rng_for(session_seed, tag::FALLBACK_A)),
        BitVec::random(m, &mut rng_for(session_seed, tag::FALLBACK_B)),
    )
}

/// The stations' private per-pair records, with attacker bookkeeping
/// stripped.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalData {
    pub alice_bases: Vec<Basis>,
    pub bob_bases: Vec<Basis>,
    pub alice_bits: BitVec,
    pub bob_bits: BitVec,
}

impl From<&MeasurementRecord> for ClassicalData {
    fn from(record: &MeasurementRecord) -> ClassicalData {
        ClassicalData {
            alice_bases: record.alice_bases.clone(),
            bob_bases: record.bob_bases.clone(),
            alice_bits: record.alice_bits.clone(),
            bob_bits: record.bob_bits.clone(),
        }
    }
}

/// Everything a session announces in the clear about the raw pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicAnnouncement {
    pub alice_bases: Vec<Basis>,
    pub bob_bases: Vec<Basis>,
    /// Per-pair basis agreement — derivable from the bases, announced as
    /// the sifting decision.
    pub agreement: BitVec,
    /// Pair indices of the working string S, ascending.
    pub working_positions: Vec<usize>,
    /// Corrected-error pattern over S in `working_positions` order;
    /// `None` when reconciliation never completed.
    pub errors: Option<BitVec>,
    /// |S|.
    pub s: usize,
}

/// Could `classical` have produced `announcement`?
///
/// `Ok(true)` exactly when the private record's public projection —
/// bases, agreement, and the error pattern over the working set — matches
/// the announced values. An internally inconsistent announcement is an
/// error rather than a mismatch.
pub fn transcript_compatible(
    classical: &ClassicalData,
    announcement: &PublicAnnouncement,
) -> Result<bool, ProtocolError> {
    let n = announcement.alice_bases.len();
    if announcement.bob_bases.len() != n || announcement.agreement.len() != n {
        return Err(ProtocolError::Announcement {
            reason: "bases and agreement must cover the same pairs",
        });
    }
    for i in 0..n {
        let agree = announcement.alice_bases[i] == announcement.bob_bases[i];
        if announcement.agreement.get(i) != agree {
            return Err(ProtocolError::Announcement {
                reason: "agreement bits must match the announced bases",
            });
        }
    }
    if announcement.s != announcement.working_positions.len() {
        return Err(ProtocolError::Announcement {
            reason: "s must equal the working set size",
        });
    }
    let ascending = announcement
        .working_positions
        .windows(2)
        .all(|w| w[0] < w[1]);
    if !ascending || announcement.working_positions.iter().any(|&p| p >= n) {
        return Err(ProtocolError::Announcement {
            reason: "working positions must be ascending pair indices",
        });
    }
    if announcement
        .working_positions
        .iter()
        .any(|&p| !announcement.agreement.get(p))
    {
        return Err(ProtocolError::Announcement {
            reason: "working positions must be sifted pairs",
        });
    }
    if let Some(errors) = &announcement.errors {
        if errors.len() != announcement.s {
            return Err(ProtocolError::Announcement {
                reason: "error pattern must cover the working set",
            });
        }
    }

    if classical.alice_bases.len() != n
        || classical.alice_bases != announcement.alice_bases
        || classical.bob_bases != announcement.bob_bases
    {
        return Ok(false);
    }
    if let Some(errors) = &announcement.errors {
        for (j, &pos) in announcement.working_positions.iter().enumerate() {
            let actual = classical.alice_bits.get(pos) != classical.bob_bits.get(pos);
            if errors.get(j) != actual {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The index sets a session partitions its pairs into, in pair
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SiftState {
    /// Working string S.
    pub s_set: Vec<usize>,
    /// Corrected positions E ⊆ S.
    pub e_set: BTreeSet<usize>,
    /// Reconciled positions R: the first r of S − E (empty when the
    /// session never got that far).
    pub r_set: Vec<usize>,
    /// Estimation sample T, disjoint from S.
    pub t_set: Vec<usize>,
}

/// The complete public record of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub announcement: PublicAnnouncement,
    /// Estimation sample, as pair indices.
    pub sample_indices: Vec<usize>,
    /// Sampled pairs that disagreed, as pair indices.
    pub sample_mismatch_positions: Vec<usize>,
    pub validated: bool,
    pub channel_log: ChannelLog,
}

/// Runtime breakdowns, distinct from a failed validation: the session
/// ends on fallback keys and the run counts as operationally broken
/// rather than merely insecure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// The one-time pad budget ran out mid-protocol.
    PadExhausted,
    /// The classical channel misbehaved (framing, decoding, sequencing).
    Channel,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::PadExhausted => "pad_exhausted",
            FaultKind::Channel => "channel",
        })
    }
}

/// Everything a session needs besides its seed.
#[derive(Debug, Clone)]
pub struct SessionSetup {
    pub params: ProtocolParams,
    pub matrix: BitMatrix,
    pub source: SourceModel,
    /// Template for the reconciliation phase. Its `shuffle_seed` is
    /// replaced per session, so the field's value here is irrelevant.
    pub reconcile: ReconcileConfig,
    pub pad_budget: u64,
}

/// Default pad provisioning: four times the planning floor q_min, plus
/// the estimation sample the pad must also cover.
pub fn default_pad_budget(params: &ProtocolParams, fraction: f64) -> Result<u64, ProtocolError> {
    let extended = sifted_budget(params.s, fraction)?;
    Ok(4 * params.q_min + (extended - params.s) as u64)
}

impl SessionSetup {
    /// Assemble a setup with default reconciliation knobs and pad budget.
    pub fn new(
        params: ProtocolParams,
        matrix: BitMatrix,
        source: SourceModel,
    ) -> Result<SessionSetup, ProtocolError> {
        let reconcile = ReconcileConfig::default();
        let pad_budget = default_pad_budget(&params, reconcile.estimation_fraction)?;
        let setup = SessionSetup {
            params,
            matrix,
            source,
            reconcile,
            pad_budget,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.matrix.rows() != self.params.m || self.matrix.cols() != self.params.r {
            return Err(ProtocolError::MatrixShape {
                rows: self.matrix.rows(),
                cols: self.matrix.cols(),
                m: self.params.m,
                r: self.params.r,
            });
        }
        self.source.validate()?;
        self.reconcile
            .validate()
            .map_err(|e| ProtocolError::Config {
                reason: e.to_string(),
            })?;
        sifted_budget(self.params.s, self.reconcile.estimation_fraction)?;
        if self.pad_budget == 0 {
            return Err(ProtocolError::ZeroPadBudget);
        }
        Ok(())
    }
}

/// Everything one session produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub alice_key: BitVec,
    pub bob_key: BitVec,
    /// The strict error-count acceptance test passed.
    pub validated: bool,
    /// Runtime fault, if the session broke down operationally.
    pub fault: Option<FaultKind>,
    /// Error rate the session observed: corrections/s when reconciliation
    /// completed, the sampled estimate when it did not, NaN before any
    /// disclosure happened.
    pub qber: f64,
    pub pad_consumed: u64,
    /// m − pad spent when validated, −(pad spent) otherwise.
    pub net_gain: i64,
    pub keys_equal: bool,
    pub sift: Option<SiftState>,
    /// Coordinates in the estimate are indices into the extended sifted
    /// string; the transcript carries their pair-index form.
    pub estimate: Option<EstimateReport>,
    /// Coordinates in the report are payload slots (S in working order).
    pub reconcile: Option<ReconcileReport>,
    pub transcript: Transcript,
    pub classical: ClassicalData,
}

fn fault_kind(err: &CascadeError) -> FaultKind {
    match err {
        CascadeError::PadExhausted { .. } => FaultKind::PadExhausted,
        _ => FaultKind::Channel,
    }
}

#[allow(clippy::too_many_arguments)]
fn failed_outcome(
    m: usize,
    session_seed: u64,
    fault: Option<FaultKind>,
    qber: f64,
    link: Link,
    sift: Option<SiftState>,
    estimate: Option<EstimateReport>,
    announcement: PublicAnnouncement,
    sample_indices: Vec<usize>,
    sample_mismatch_positions: Vec<usize>,
    classical: ClassicalData,
) -> SessionOutcome {
    let pad_consumed = link.pad_consumed();
    let channel_log = link.into_log();
    let (alice_key, bob_key) = fallback_key(m, session_seed);
    SessionOutcome {
        keys_equal: alice_key == bob_key,
        alice_key,
        bob_key,
        validated: false,
        fault,
        qber,
        pad_consumed,
        net_gain: -(pad_consumed as i64),
        sift,
        estimate,
        reconcile: None,
        transcript: Transcript {
            announcement,
            sample_indices,
            sample_mismatch_positions,
            validated: false,
            channel_log,
        },
        classical,
    }
}

/// Run one complete session from a seed.
///
/// Configuration problems surface as `Err`; runtime breakdowns (pad
/// exhaustion, channel faults) and failed validations are `Ok` outcomes
/// that carry fallback keys and a fault marker or `validated = false`.
pub fn run_session(
    setup: &SessionSetup,
    session_seed: u64,
) -> Result<SessionOutcome, ProtocolError> {
    setup.validate()?;
    let p = &setup.params;
    let fraction = setup.reconcile.estimation_fraction;
    let want = sifted_budget(p.s, fraction)?;
    let sample_size = want - p.s;

    let mut transmit_rng = rng_for(session_seed, tag::TRANSMIT);
    let record = sample_transmission(&setup.source, p.n, &mut transmit_rng)?;
    let classical = ClassicalData::from(&record);
    let agreement: BitVec = (0..p.n)
        .map(|i| record.alice_bases[i] == record.bob_bases[i])
        .collect();

    let sifted = match sift(&record, want) {
        Ok(sifted) => sifted,
        Err(ProtocolError::SiftShortfall { .. }) => {
            // Too few matching bases: the session ends before any
            // disclosure, spending nothing.
            let announcement = PublicAnnouncement {
                alice_bases: classical.alice_bases.clone(),
                bob_bases: classical.bob_bases.clone(),
                agreement,
                working_positions: vec![],
                errors: None,
                s: 0,
            };
            let (alice_key, bob_key) = fallback_key(p.m, session_seed);
            return Ok(SessionOutcome {
                keys_equal: alice_key == bob_key,
                alice_key,
                bob_key,
                validated: false,
                fault: None,
                qber: f64::NAN,
                pad_consumed: 0,
                net_gain: 0,
                sift: None,
                estimate: None,
                reconcile: None,
                transcript: Transcript {
                    announcement,
                    sample_indices: vec![],
                    sample_mismatch_positions: vec![],
                    validated: false,
                    channel_log: ChannelLog::default(),
                },
                classical,
            });
        }
        Err(other) => return Err(other),
    };

    let mut link = Link::new(mix(session_seed, tag::PAD), setup.pad_budget);
    let mut sample_rng = rng_for(session_seed, tag::SAMPLE);
    let est = match estimate_error_rate(
        &sifted.alice,
        &sifted.bob,
        sample_size,
        &mut sample_rng,
        &mut link,
    ) {
        Ok(est) => est,
        Err(err) => {
            let announcement = PublicAnnouncement {
                alice_bases: classical.alice_bases.clone(),
                bob_bases: classical.bob_bases.clone(),
                agreement,
                working_positions: vec![],
                errors: None,
                s: 0,
            };
            return Ok(failed_outcome(
                p.m,
                session_seed,
                Some(fault_kind(&err)),
                f64::NAN,
                link,
                None,
                None,
                announcement,
                vec![],
                vec![],
                classical,
            ));
        }
    };

    let sample_slots: BTreeSet<usize> = est.sample_indices.iter().copied().collect();
    let payload_slots: Vec<usize> = (0..want).filter(|i| !sample_slots.contains(i)).collect();
    debug_assert_eq!(payload_slots.len(), p.s);
    let alice_payload = sifted.alice.select(&payload_slots);
    let mut bob_payload = sifted.bob.select(&payload_slots);
    let s_set: Vec<usize> = payload_slots.iter().map(|&i| sifted.positions[i]).collect();
    let t_set: Vec<usize> = est
        .sample_indices
        .iter()
        .map(|&i| sifted.positions[i])
        .collect();
    let sample_mismatch_pairs: Vec<usize> = est
        .mismatch_positions
        .iter()
        .map(|&i| sifted.positions[i])
        .collect();

    // The estimate alone can sink the session before any parity flows.
    if est.rate >= p.epsilon {
        let announcement = PublicAnnouncement {
            alice_bases: classical.alice_bases.clone(),
            bob_bases: classical.bob_bases.clone(),
            agreement,
            working_positions: s_set.clone(),
            errors: Some(BitVec::zeros(p.s)),
            s: p.s,
        };
        let sift_state = SiftState {
            s_set,
            e_set: BTreeSet::new(),
            r_set: vec![],
            t_set: t_set.clone(),
        };
        let qber = est.rate;
        return Ok(failed_outcome(
            p.m,
            session_seed,
            None,
            qber,
            link,
            Some(sift_state),
            Some(est),
            announcement,
            t_set,
            sample_mismatch_pairs,
            classical,
        ));
    }

    let mut config = setup.reconcile.clone();
    config.shuffle_seed = mix(session_seed, tag::SHUFFLE);
    let report = match reconcile(&alice_payload, &mut bob_payload, est.rate, &config, &mut link) {
        Ok(report) => report,
        Err(err) => {
            let announcement = PublicAnnouncement {
                alice_bases: classical.alice_bases.clone(),
                bob_bases: classical.bob_bases.clone(),
                agreement,
                working_positions: s_set.clone(),
                errors: None,
                s: p.s,
            };
            let sift_state = SiftState {
                s_set,
                e_set: BTreeSet::new(),
                r_set: vec![],
                t_set: t_set.clone(),
            };
            let qber = est.rate;
            return Ok(failed_outcome(
                p.m,
                session_seed,
                Some(fault_kind(&err)),
                qber,
                link,
                Some(sift_state),
                Some(est),
                announcement,
                t_set,
                sample_mismatch_pairs,
                classical,
            ));
        }
    };

    let e_count = report.error_positions.len();
    let qber = e_count as f64 / p.s as f64;
    let validated = validate_error_count(e_count, p.epsilon, p.s);
    let errors_vec: BitVec = (0..p.s).map(|j| report.error_positions.contains(&j)).collect();
    let e_set: BTreeSet<usize> = report.error_positions.iter().map(|&j| s_set[j]).collect();
    let all_slots: Vec<usize> = (0..p.s).collect();
    let (r_slots, r_set) = match reconciled_set(&all_slots, &report.error_positions, p.r) {
        Ok(slots) => {
            let set: Vec<usize> = slots.iter().map(|&j| s_set[j]).collect();
            (slots, set)
        }
        Err(_) => (vec![], vec![]),
    };
    debug_assert!(!validated || r_slots.len() == p.r);

    let (alice_key, bob_key) = if validated {
        (
            privacy_amplify(&setup.matrix, &alice_payload.select(&r_slots))?,
            privacy_amplify(&setup.matrix, &bob_payload.select(&r_slots))?,
        )
    } else {
        fallback_key(p.m, session_seed)
    };

    let pad_consumed = link.pad_consumed();
    let net_gain = if validated {
        p.m as i64 - pad_consumed as i64
    } else {
        -(pad_consumed as i64)
    };
    let announcement = PublicAnnouncement {
        alice_bases: classical.alice_bases.clone(),
        bob_bases: classical.bob_bases.clone(),
        agreement,
        working_positions: s_set.clone(),
        errors: Some(errors_vec),
        s: p.s,
    };
    Ok(SessionOutcome {
        keys_equal: alice_key == bob_key,
        alice_key,
        bob_key,
        validated,
        fault: None,
        qber,
        pad_consumed,
        net_gain,
        sift: Some(SiftState {
            s_set,
            e_set,
            r_set,
            t_set: t_set.clone(),
        }),
        estimate: Some(est),
        reconcile: Some(report),
        transcript: Transcript {
            announcement,
            sample_indices: t_set,
            sample_mismatch_positions: sample_mismatch_pairs,
            validated,
            channel_log: link.into_log(),
        },
        classical,
    })
}
