//! Acceptance suite: one test per release criterion. Each test prints a
//! single `criterion NN PASS` line with its elapsed time; a failing
//! criterion fails its test. Tolerances and runtime budgets are pinned
//! in the constants next to each criterion.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use eprsim::bounds::{derive_params, entropy_lower_bound, epsilon_star, net_gain_margin, theta};
use eprsim::cascade::{estimate_error_rate, reconcile, Link, ReconcileConfig};
use eprsim::gf2::{generate_pa_matrix, generate_pa_matrix_with_budget, BitMatrix, BitVec, Gf2Error};
use eprsim::protocol::{run_session, sifted_budget, transcript_compatible, SessionSetup};
use eprsim::quantum::{
    bell_overlap, outcome_dist, sample_outcome, sample_transmission, Amplitude, Basis, BellState,
    SourceModel,
};
use eprsim::seed::{mix, rng_for, tag};
use rand::Rng;
use statrs::distribution::ContinuousCDF;

fn finish(number: u32, what: &str, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < limit,
        "criterion {number:02} overran its {limit:?} budget: {elapsed:?}"
    );
    println!("criterion {number:02} PASS ({elapsed:.2?}): {what}");
}

/// Reference binary entropy through ln, independent of the log2 route
/// the library uses.
fn entropy_oracle(p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln()) / LN_2
}

/// Reference theta through powf on the base instead of exp2.
fn theta_oracle(r: usize, tau: f64) -> f64 {
    let exponent = (1.0 - entropy_oracle(0.5 - 3.0 * tau / 16.0)) * (tau / 2.0) * r as f64;
    2f64.powf(-exponent)
}

#[test]
fn criterion_01_formula_reproduction() {
    const REL_TOL: f64 = 1e-10;
    let t = Instant::now();
    let grid: [(usize, f64, usize); 20] = [
        (50, 0.05, 8),
        (50, 0.2, 16),
        (50, 0.5, 8),
        (50, 1.0, 32),
        (200, 0.05, 8),
        (200, 0.1, 64),
        (200, 0.5, 16),
        (200, 1.5, 64),
        (500, 2.0, 128),
        (800, 0.1, 64),
        (1000, 0.05, 128),
        (1000, 0.1, 8),
        (1000, 0.5, 64),
        (1000, 1.0, 256),
        (2286, 0.1, 64),
        (2286, 0.3, 128),
        (5000, 0.05, 64),
        (5000, 0.2, 1024),
        (10_000, 0.05, 512),
        (10_000, 0.2, 64),
    ];
    for (r, tau, m) in grid {
        let got = theta(r, tau).unwrap();
        let want = theta_oracle(r, tau);
        assert!(want > 0.0, "oracle underflowed at r={r} tau={tau}");
        let rel = (got - want).abs() / want;
        assert!(rel <= REL_TOL, "theta({r}, {tau}): rel {rel:e}");

        let got_bound = entropy_lower_bound(m, got).unwrap().raw;
        let want_bound =
            m as f64 - 2.0 * (m as f64 + 1.0 / LN_2) * (want + 2.0 * want.sqrt());
        let rel = (got_bound - want_bound).abs() / want_bound.abs();
        assert!(
            rel <= REL_TOL,
            "bound(m={m}, r={r}, tau={tau}): rel {rel:e}"
        );
    }
    finish(
        1,
        "theta and the entropy floor match the ln/powf oracle on 20 grid points",
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_02_setup_arithmetic() {
    let t = Instant::now();
    let p = derive_params(64, 0.2, 0.1, 0.05, 800).unwrap();
    assert_eq!(p.d_k, 480);
    assert_eq!(p.s, 1000);
    assert_eq!(p.n, 2286);
    assert_eq!(p.q_min, 722);
    finish(
        2,
        "worked point (eps 0.2, tau 0.1, tau_s 0.05, r 800) gives (480, 1000, 2286, 722)",
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_03_net_gain_threshold() {
    const TOL: f64 = 1e-6;
    let t = Instant::now();
    assert!(net_gain_margin(0.05).unwrap() > 0.0);
    assert!(net_gain_margin(0.15).unwrap() < 0.0);
    let star = epsilon_star(TOL).unwrap();
    assert!(star > 0.09 && star < 0.1, "root at {star}");
    // the bracket around the bisection result still straddles zero
    assert!(net_gain_margin(star - 1e-5).unwrap() > 0.0);
    assert!(net_gain_margin(star + 1e-5).unwrap() < 0.0);
    finish(
        3,
        "margin signs at 0.05 / 0.15 and the break-even rate bracketed to 1e-6",
        t,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_04_bell_statistics_oracle_equivalence() {
    let t = Instant::now();
    // every outcome distribution equals the squared exact amplitudes
    for state in BellState::ALL {
        for a_basis in Basis::BOTH {
            for b_basis in Basis::BOTH {
                let dist = outcome_dist(state, a_basis, b_basis);
                for (k, &p) in dist.iter().enumerate() {
                    let amp = bell_overlap(state, a_basis, b_basis, k & 2 != 0, k & 1 != 0);
                    assert_eq!(p, amp.prob(), "{state} {a_basis}{b_basis} {k}");
                }
            }
        }
    }
    // equal-outcome overlap identity, exhaustively for runs of length <= 3:
    // each position picks a basis, a state correlated in it, and an outcome
    for r in 1usize..=3 {
        let choices = 8u32.pow(r as u32);
        for mut code in 0..choices {
            let mut product = Amplitude::ONE;
            let mut dot = false;
            for _ in 0..r {
                let basis = if code & 1 != 0 { Basis::Times } else { Basis::Plus };
                let state = BellState::correlated_in(basis)[(code >> 1) as usize & 1];
                let alpha = code & 4 != 0;
                code >>= 3;
                product = product * bell_overlap(state, basis, basis, alpha, alpha);
                let gamma = state.gamma_in(basis).expect("state is correlated");
                dot ^= alpha & gamma;
            }
            let sign = if dot { -1 } else { 1 };
            assert_eq!(product, Amplitude::new(sign, r as u32));
        }
    }
    finish(
        4,
        "64 outcome laws equal squared amplitudes; sign identity exhaustive to length 3",
        t,
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_05_sampler_fidelity() {
    const SAMPLES: usize = 100_000;
    const TV_TOL: f64 = 0.01;
    let t = Instant::now();
    let mut rng = rng_for(0xACCE97, 5);
    for state in BellState::ALL {
        for a_basis in Basis::BOTH {
            for b_basis in Basis::BOTH {
                let exact = outcome_dist(state, a_basis, b_basis);
                let mut counts = [0usize; 4];
                for _ in 0..SAMPLES {
                    let (a, b) = sample_outcome(state, a_basis, b_basis, &mut rng);
                    counts[usize::from(a) * 2 + usize::from(b)] += 1;
                }
                let tv: f64 = (0..4)
                    .map(|k| (counts[k] as f64 / SAMPLES as f64 - exact[k].as_f64()).abs())
                    .sum::<f64>()
                    / 2.0;
                assert!(tv <= TV_TOL, "{state} {a_basis}{b_basis}: tv {tv}");
            }
        }
    }
    finish(
        5,
        "sampled outcome frequencies within total variation 0.01 of exact (16 settings)",
        t,
        Duration::from_secs(60),
    );
}

fn desk_setup(source: SourceModel) -> SessionSetup {
    let params = derive_params(8, 0.1, 0.2, 0.15, 200).unwrap();
    let matrix = generate_pa_matrix(
        params.m,
        params.r,
        params.d_k,
        &mut rng_for(0xDE5C, tag::MATRIX),
    )
    .unwrap();
    SessionSetup::new(params, matrix, source).unwrap()
}

#[test]
fn criterion_06_honest_completeness() {
    const SESSIONS: u64 = 100;
    let t = Instant::now();
    let setup = desk_setup(SourceModel::Ideal);
    for i in 0..SESSIONS {
        let seed = mix(mix(6, tag::SESSION), i);
        let outcome = run_session(&setup, seed).unwrap();
        assert!(outcome.validated, "session {i} failed validation");
        assert!(outcome.keys_equal, "session {i} key mismatch");
        assert_eq!(outcome.qber, 0.0, "session {i} nonzero qber");
    }
    finish(
        6,
        "100 ideal-source desk-scale sessions all validate with equal keys and qber 0",
        t,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_07_attack_detection() {
    const PAIRS: usize = 100_000;
    const RATE_TOL: f64 = 0.01;
    const SESSIONS: u64 = 100;
    let t = Instant::now();

    let source = SourceModel::InterceptResend { intercept_prob: 1.0 };
    let record = sample_transmission(&source, PAIRS, &mut rng_for(7, tag::TRANSMIT)).unwrap();
    let mut matching = 0usize;
    let mut disagree = 0usize;
    for i in 0..PAIRS {
        if record.alice_bases[i] == record.bob_bases[i] {
            matching += 1;
            if record.alice_bits.get(i) != record.bob_bits.get(i) {
                disagree += 1;
            }
        }
    }
    let rate = disagree as f64 / matching as f64;
    assert!(
        (rate - 0.25).abs() <= RATE_TOL,
        "equal-basis disagreement {rate}"
    );

    let mut setup = desk_setup(source);
    // a larger estimation sample sharpens detection; the budget covers
    // reconciliation for the rare session that slips past the estimate
    setup.reconcile.estimation_fraction = 0.25;
    setup.pad_budget = 2000;
    let failed = (0..SESSIONS)
        .filter(|&i| {
            let seed = mix(mix(77, tag::SESSION), i);
            !run_session(&setup, seed).unwrap().validated
        })
        .count();
    assert!(failed >= 99, "only {failed}/100 interception sessions failed");
    finish(
        7,
        "interception shows 0.25 disagreement over 1e5 pairs; >= 99/100 sessions rejected",
        t,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_08_cascade_correctness() {
    const RUNS: u64 = 100;
    const PAYLOAD: usize = 1000;
    let t = Instant::now();
    for p in [0.01, 0.05, 0.10] {
        let extended = sifted_budget(PAYLOAD, 0.1).unwrap();
        let sample_size = extended - PAYLOAD;
        let mut clean = 0u64;
        let mut masked_total = 0u64;
        let mut masked_flips = 0u64;
        for run in 0..RUNS {
            let seed = mix(mix(run, 88), (p * 100.0) as u64);
            let mut noise_rng = rng_for(seed, 1);
            let alice = BitVec::random(extended, &mut noise_rng);
            let mut bob = alice.clone();
            for i in 0..extended {
                if noise_rng.random_bool(p) {
                    bob.flip(i);
                }
            }

            let reconcile_once = |pad_seed: u64| {
                let mut link = Link::new(pad_seed, 1_000_000);
                let mut sample_rng = rng_for(seed, tag::SAMPLE);
                let est =
                    estimate_error_rate(&alice, &bob, sample_size, &mut sample_rng, &mut link)
                        .unwrap();
                let sampled: BTreeSet<usize> = est.sample_indices.iter().copied().collect();
                let payload: Vec<usize> =
                    (0..extended).filter(|i| !sampled.contains(i)).collect();
                let alice_p = alice.select(&payload);
                let mut bob_p = bob.select(&payload);
                let config = ReconcileConfig {
                    shuffle_seed: mix(seed, tag::SHUFFLE),
                    ..ReconcileConfig::default()
                };
                let report =
                    reconcile(&alice_p, &mut bob_p, est.rate, &config, &mut link).unwrap();
                // pad ledger identity: everything masked is either the
                // sample disclosure or a parity bit
                assert_eq!(
                    link.pad_consumed(),
                    est.pad_consumed + report.parities_exchanged
                );
                assert_eq!(est.pad_consumed, sample_size as u64);
                assert_eq!(link.pad_consumed(), link.log().masked_bits());
                (link.into_log(), report)
            };

            let (log_a, report_a) = reconcile_once(mix(seed, tag::PAD));
            let (log_b, report_b) = reconcile_once(mix(seed, tag::PAD) ^ 0x5555);
            if report_a.residual_mismatch == 0 {
                clean += 1;
            }
            // leak confinement: a fresh pad changes masked bits only,
            // and the corrections are pad-independent
            assert_eq!(report_a.error_positions, report_b.error_positions);
            assert_eq!(log_a.messages.len(), log_b.messages.len());
            let mut streams_differ = false;
            for (ma, mb) in log_a.messages.iter().zip(&log_b.messages) {
                assert_eq!(ma.kind, mb.kind);
                assert_eq!(ma.masked, mb.masked);
                if ma.masked {
                    masked_total += ma.payload.len() as u64;
                    masked_flips += ma.payload.xor(&mb.payload).weight() as u64;
                    if ma.payload != mb.payload {
                        streams_differ = true;
                    }
                } else {
                    assert_eq!(ma.payload, mb.payload);
                }
            }
            assert!(streams_differ, "re-padding left the wire unchanged");
        }
        assert!(clean >= 95, "p={p}: only {clean}/{RUNS} runs fully reconciled");
        let flip_rate = masked_flips as f64 / masked_total as f64;
        assert!(
            (flip_rate - 0.5).abs() < 0.05,
            "p={p}: masked flip rate {flip_rate}"
        );
    }
    finish(
        8,
        "BSC reconciliation: >= 95/100 clean at p in {0.01, 0.05, 0.10}; ledger and leak bounds hold",
        t,
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_09_matrix_guarantee() {
    const M: usize = 8;
    const R: usize = 64;
    const D_K: usize = 16;
    let t = Instant::now();
    let matrix = generate_pa_matrix(M, R, D_K, &mut rng_for(9, tag::MATRIX)).unwrap();
    let report = matrix.min_combination_weight().unwrap();
    assert!(report.full_rank);
    assert!(
        report.min_weight >= D_K,
        "weakest combination has weight {}",
        report.min_weight
    );
    assert_eq!(matrix.row_combination(&report.witness).unwrap().weight(), report.min_weight);

    // a duplicated row is a weight-zero combination and a rank defect
    let mut rng = rng_for(99, tag::MATRIX);
    let mut rows: Vec<BitVec> = (0..M - 1).map(|_| BitVec::random(R, &mut rng)).collect();
    rows.push(rows[0].clone());
    let duplicate = BitMatrix::from_rows(rows).unwrap();
    assert!(duplicate.rank() < M);
    let report = duplicate.min_combination_weight().unwrap();
    assert_eq!(report.min_weight, 0);
    assert!(!report.full_rank);

    // an impossible weight target exhausts the trial budget rather than
    // returning a weak matrix
    match generate_pa_matrix_with_budget(M, R, 40, 50, &mut rng_for(9, tag::MATRIX)) {
        Err(Gf2Error::BudgetExhausted { best_weight, .. }) => assert!(best_weight < 40),
        other => panic!("expected budget exhaustion, got {other:?}"),
    }
    finish(
        9,
        "8x64 matrix passes the exhaustive weight-16 audit; defects are rejected",
        t,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_10_fallback_key_uniformity() {
    const KEYS: usize = 100_000;
    const BINS: usize = 256;
    // chi-square upper quantile at significance 1e-3 for 255 degrees of
    // freedom, from statrs at build-test time
    let t = Instant::now();
    let params = derive_params(8, 0.05, 0.08, 0.1, 16).unwrap();
    let matrix = generate_pa_matrix(
        params.m,
        params.r,
        params.d_k,
        &mut rng_for(10, tag::MATRIX),
    )
    .unwrap();
    let mut setup = SessionSetup::new(
        params,
        matrix,
        SourceModel::InterceptResend { intercept_prob: 1.0 },
    )
    .unwrap();
    setup.reconcile.estimation_fraction = 0.25;

    let mut counts = vec![0u64; BINS];
    let mut collected = 0usize;
    let mut i = 0u64;
    while collected < KEYS {
        let seed = mix(mix(10, tag::SESSION), i);
        i += 1;
        let outcome = run_session(&setup, seed).unwrap();
        if outcome.validated {
            continue;
        }
        let byte = (0..8).fold(0usize, |acc, b| {
            acc << 1 | usize::from(outcome.alice_key.get(b))
        });
        counts[byte] += 1;
        collected += 1;
    }
    let expected = KEYS as f64 / BINS as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let critical = statrs::distribution::ChiSquared::new((BINS - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(
        chi2 < critical,
        "chi2 {chi2:.1} exceeds the {critical:.1} significance cutoff"
    );
    finish(
        10,
        "1e5 failed-session fallback bytes pass chi-square uniformity at 1e-3",
        t,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_11_compatible_record_enumeration() {
    let t = Instant::now();
    // honest three-pair record: bases agree at positions 0 and 2
    let classical = eprsim::protocol::ClassicalData {
        alice_bases: vec![Basis::Plus, Basis::Plus, Basis::Times],
        bob_bases: vec![Basis::Plus, Basis::Times, Basis::Times],
        alice_bits: BitVec::from_bools(&[true, false, true]),
        bob_bits: BitVec::from_bools(&[true, true, false]),
    };
    let announcement = eprsim::protocol::PublicAnnouncement {
        alice_bases: classical.alice_bases.clone(),
        bob_bases: classical.bob_bases.clone(),
        agreement: BitVec::from_bools(&[true, false, true]),
        working_positions: vec![0, 2],
        errors: Some(BitVec::from_bools(&[false, true])),
        s: 2,
    };
    assert_eq!(transcript_compatible(&classical, &announcement), Ok(true));

    let n = 3usize;
    let s = 2usize;
    let mut compatible = 0u32;
    for code in 0..(1u32 << (4 * n)) {
        let basis_of = |b: bool| if b { Basis::Times } else { Basis::Plus };
        let candidate = eprsim::protocol::ClassicalData {
            alice_bases: (0..n).map(|i| basis_of(code & (1 << i) != 0)).collect(),
            bob_bases: (0..n).map(|i| basis_of(code & (1 << (n + i)) != 0)).collect(),
            alice_bits: (0..n).map(|i| code & (1 << (2 * n + i)) != 0).collect(),
            bob_bits: (0..n).map(|i| code & (1 << (3 * n + i)) != 0).collect(),
        };
        if transcript_compatible(&candidate, &announcement).unwrap() {
            compatible += 1;
        }
    }
    assert_eq!(compatible, 1u32 << n << (n - s), "2^n * 2^(n-s) records");
    assert_eq!(compatible, 16);
    finish(
        11,
        "exhaustive n=3, s=2 count of compatible classical records equals 16",
        t,
        Duration::from_secs(1),
    );
}
