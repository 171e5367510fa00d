//! GF(2) linear algebra: packed bit vectors, dense bit matrices, weight
//! search over row combinations, and rejection-sampled generation of
//! full-rank matrices with a minimum combination weight.

mod bitvec;
mod matrix;

pub use bitvec::BitVec;
pub use matrix::{BitMatrix, WeightReport, EXHAUSTIVE_ROW_LIMIT};

use rand::Rng;
use thiserror::Error;

/// Default number of candidate matrices drawn before generation gives up.
pub const DEFAULT_GENERATION_BUDGET: u64 = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("{op}: expected length {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix has no rows")]
    Empty,
    #[error(
        "{rows} rows exceeds the exhaustive weight-search limit of {EXHAUSTIVE_ROW_LIMIT}; \
         screen larger matrices probabilistically (random combinations) instead"
    )]
    ExhaustiveLimit { rows: usize },
    #[error("matrix rows are linearly dependent (rank {rank} of {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error(
        "no {rows}x{cols} matrix with minimum combination weight >= {target} \
         found in {trials} trials (best seen: {best_weight})"
    )]
    BudgetExhausted {
        rows: usize,
        cols: usize,
        target: usize,
        trials: u64,
        best_weight: usize,
    },
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Draw random `m` x `r` matrices until one has full row rank and minimum
/// row-combination weight at least `d_k`, using the default trial budget.
///
/// Deterministic in `rng`. On exhaustion the error reports how many trials
/// ran and the best minimum weight among full-rank candidates.
pub fn generate_pa_matrix(
    m: usize,
    r: usize,
    d_k: usize,
    rng: &mut impl Rng,
) -> Result<BitMatrix, Gf2Error> {
    generate_pa_matrix_with_budget(m, r, d_k, DEFAULT_GENERATION_BUDGET, rng)
}

/// [`generate_pa_matrix`] with an explicit trial budget.
pub fn generate_pa_matrix_with_budget(
    m: usize,
    r: usize,
    d_k: usize,
    budget: u64,
    rng: &mut impl Rng,
) -> Result<BitMatrix, Gf2Error> {
    if m == 0 {
        return Err(Gf2Error::Empty);
    }
    if m > EXHAUSTIVE_ROW_LIMIT {
        return Err(Gf2Error::ExhaustiveLimit { rows: m });
    }
    if m > r {
        return Err(Gf2Error::Infeasible(format!(
            "{m} rows cannot be independent over {r} columns"
        )));
    }
    if d_k == 0 || d_k > r {
        return Err(Gf2Error::Infeasible(format!(
            "target weight {d_k} outside 1..={r}"
        )));
    }
    let mut best_weight = 0usize;
    for _ in 0..budget {
        let rows = (0..m).map(|_| BitVec::random(r, rng)).collect();
        let candidate = BitMatrix::from_rows(rows)?;
        if candidate.rank() < m {
            continue;
        }
        let report = candidate.min_combination_weight()?;
        if report.min_weight >= d_k {
            return Ok(candidate);
        }
        best_weight = best_weight.max(report.min_weight);
    }
    Err(Gf2Error::BudgetExhausted {
        rows: m,
        cols: r,
        target: d_k,
        trials: budget,
        best_weight,
    })
}
