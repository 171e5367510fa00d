//! End-to-end session behavior across source models: validation rates,
//! accounting identities, and announcement consistency.

use eprsim::bounds::derive_params;
use eprsim::gf2::generate_pa_matrix;
use eprsim::protocol::{
    run_session, transcript_compatible, FaultKind, SessionOutcome, SessionSetup,
};
use eprsim::quantum::SourceModel;
use eprsim::seed::{mix, rng_for, tag};

fn desk_setup(source: SourceModel) -> SessionSetup {
    let params = derive_params(8, 0.1, 0.2, 0.15, 200).expect("valid parameters");
    let matrix = generate_pa_matrix(
        params.m,
        params.r,
        params.d_k,
        &mut rng_for(0xA11CE, tag::MATRIX),
    )
    .expect("matrix search succeeds at this size");
    SessionSetup::new(params, matrix, source).expect("valid setup")
}

fn run_batch(setup: &SessionSetup, master: u64, count: u64) -> Vec<SessionOutcome> {
    (0..count)
        .map(|i| {
            let session_seed = mix(mix(master, tag::SESSION), i);
            run_session(setup, session_seed).expect("session runs")
        })
        .collect()
}

/// Every outcome must satisfy the ledger arithmetic regardless of how the
/// session ended.
fn assert_accounting(outcome: &SessionOutcome, m: usize) {
    let expected = if outcome.validated {
        m as i64 - outcome.pad_consumed as i64
    } else {
        -(outcome.pad_consumed as i64)
    };
    assert_eq!(outcome.net_gain, expected);
    assert_eq!(outcome.alice_key.len(), m);
    assert_eq!(outcome.bob_key.len(), m);
    assert_eq!(outcome.keys_equal, outcome.alice_key == outcome.bob_key);
    assert_eq!(
        outcome.pad_consumed,
        outcome.transcript.channel_log.masked_bits()
    );
}

#[test]
fn ideal_sessions_validate_on_every_seed() {
    let setup = desk_setup(SourceModel::Ideal);
    for outcome in run_batch(&setup, 41, 20) {
        assert!(outcome.validated);
        assert!(outcome.keys_equal);
        assert_eq!(outcome.qber, 0.0);
        assert_eq!(outcome.fault, None);
        assert_accounting(&outcome, 8);
        let rec = outcome.reconcile.as_ref().unwrap();
        assert_eq!(rec.residual_mismatch, 0);
        assert!(rec.error_positions.is_empty());
    }
}

#[test]
fn mild_bell_diagonal_noise_mostly_validates() {
    let setup = desk_setup(SourceModel::IidBellDiagonal {
        probs: [0.97, 0.01, 0.01, 0.01],
    });
    let outcomes = run_batch(&setup, 97, 100);
    let validated = outcomes.iter().filter(|o| o.validated).count();
    assert!(validated >= 95, "only {validated}/100 validated");
    for outcome in &outcomes {
        assert_eq!(outcome.fault, None);
        assert_accounting(outcome, 8);
        if outcome.validated {
            let rec = outcome.reconcile.as_ref().unwrap();
            if rec.residual_mismatch == 0 {
                assert!(outcome.keys_equal);
            }
            // found corrections stay under the strict tolerance
            assert!(outcome.qber < 0.1);
        } else {
            // the only non-fault failure at this noise level is an
            // estimate abort, which never reaches reconciliation
            assert!(outcome.reconcile.is_none());
            assert!(outcome.estimate.as_ref().unwrap().rate >= 0.1);
            assert!(outcome.net_gain < 0);
        }
    }
}

#[test]
fn full_interception_never_yields_a_validated_key() {
    let setup = desk_setup(SourceModel::InterceptResend {
        intercept_prob: 1.0,
    });
    let outcomes = run_batch(&setup, 13, 20);
    for outcome in &outcomes {
        assert!(!outcome.validated);
        assert_accounting(outcome, 8);
        if outcome.fault.is_none() && outcome.sift.is_some() {
            // caught at the estimate or by the strict validation test
            let est = outcome.estimate.as_ref().unwrap();
            if outcome.reconcile.is_none() {
                assert!(est.rate >= 0.1);
            }
        }
    }
    // every record shows the attack's equal-basis disagreement
    let eve_active = outcomes
        .iter()
        .filter_map(|o| o.estimate.as_ref())
        .filter(|e| e.mismatch > 0)
        .count();
    assert!(eve_active > 15, "only {eve_active} estimates saw mismatches");
}

#[test]
fn noisy_sessions_keep_the_pad_identity() {
    let setup = desk_setup(SourceModel::IidBellDiagonal {
        probs: [0.91, 0.03, 0.03, 0.03],
    });
    let outcomes = run_batch(&setup, 7, 30);
    let mut reconciled = 0;
    for outcome in &outcomes {
        assert_accounting(outcome, 8);
        if let (Some(est), Some(rec)) = (&outcome.estimate, &outcome.reconcile) {
            reconciled += 1;
            assert_eq!(outcome.pad_consumed, est.pad_consumed + rec.parities_exchanged);
            assert_eq!(outcome.qber, rec.error_positions.len() as f64 / 222.0);
        }
    }
    assert!(reconciled >= 20, "only {reconciled}/30 reached reconciliation");
}

#[test]
fn announcements_match_the_measured_record_exactly_when_clean() {
    for probs in [[1.0, 0.0, 0.0, 0.0], [0.94, 0.02, 0.02, 0.02]] {
        let setup = desk_setup(SourceModel::IidBellDiagonal { probs });
        for outcome in run_batch(&setup, 23, 25) {
            let Some(rec) = &outcome.reconcile else {
                continue;
            };
            let compatible =
                transcript_compatible(&outcome.classical, &outcome.transcript.announcement)
                    .expect("announcement is well formed");
            // the announcement claims exactly the corrected positions, so
            // the honest record is compatible precisely when nothing
            // slipped past reconciliation
            assert_eq!(compatible, rec.residual_mismatch == 0);
        }
    }
}

#[test]
fn confirmation_flags_sessions_with_surviving_mismatch() {
    let mut setup = desk_setup(SourceModel::IidBellDiagonal {
        probs: [0.91, 0.03, 0.03, 0.03],
    });
    setup.reconcile.final_confirmation = true;
    for outcome in run_batch(&setup, 3, 30) {
        let Some(rec) = &outcome.reconcile else {
            continue;
        };
        let agreed = rec.confirmation.expect("confirmation was enabled");
        if rec.residual_mismatch == 0 {
            assert!(agreed);
        }
        if rec.residual_mismatch > 0 {
            // sixteen random subset parities each catch a defect with
            // probability 1/2; all sixteen passing would be a fluke
            assert!(!agreed, "residual {} escaped", rec.residual_mismatch);
        }
    }
}

#[test]
fn pad_starvation_faults_instead_of_panicking() {
    let mut setup = desk_setup(SourceModel::IidBellDiagonal {
        probs: [0.91, 0.03, 0.03, 0.03],
    });
    setup.pad_budget = 60;
    let mut faulted = 0;
    for outcome in run_batch(&setup, 19, 20) {
        assert_accounting(&outcome, 8);
        if outcome.fault == Some(FaultKind::PadExhausted) {
            faulted += 1;
            assert!(!outcome.validated);
            assert!(outcome.pad_consumed <= 60);
        }
    }
    // estimate aborts escape cheaply, but any session that reaches the
    // parity passes must hit the 60-bit wall
    assert!(faulted >= 10, "only {faulted}/20 faulted on a 60-bit budget");
}
