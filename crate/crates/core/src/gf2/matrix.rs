//! Dense GF(2) matrices stored row-major as packed bit vectors.

use std::fmt;

use super::{BitVec, Gf2Error};

/// Largest row count for which the 2^m - 1 nonzero row combinations are
/// enumerated exhaustively.
pub const EXHAUSTIVE_ROW_LIMIT: usize = 24;

/// Result of the exhaustive minimum-weight search over nonzero row
/// combinations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightReport {
    /// Smallest Hamming weight over all 2^m - 1 nonzero combinations.
    pub min_weight: usize,
    /// Coefficient vector (length m) achieving `min_weight`.
    pub witness: BitVec,
    /// True iff the rows are linearly independent. Computed by elimination,
    /// independently of the weight search; the two agree because a
    /// dependent row set is exactly one with a weight-zero combination.
    pub full_rank: bool,
}

#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
    cols: usize,
}

impl BitMatrix {
    /// Build from rows of equal length. At least one row is required.
    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self, Gf2Error> {
        let first = rows.first().ok_or(Gf2Error::Empty)?;
        let cols = first.len();
        for row in &rows {
            if row.len() != cols {
                return Err(Gf2Error::Dimension {
                    op: "from_rows",
                    expected: cols,
                    got: row.len(),
                });
            }
        }
        Ok(BitMatrix { rows, cols })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| BitVec::from_fn(n, |j| i == j)).collect();
        BitMatrix { rows, cols: n }
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    /// Matrix-vector product over GF(2); entry i is `row_i . x`.
    pub fn matvec(&self, x: &BitVec) -> Result<BitVec, Gf2Error> {
        if x.len() != self.cols {
            return Err(Gf2Error::Dimension {
                op: "matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(BitVec::from_fn(self.rows.len(), |i| self.rows[i].dot(x)))
    }

    /// XOR of the rows selected by `coeffs` (length m).
    pub fn row_combination(&self, coeffs: &BitVec) -> Result<BitVec, Gf2Error> {
        if coeffs.len() != self.rows.len() {
            return Err(Gf2Error::Dimension {
                op: "row_combination",
                expected: self.rows.len(),
                got: coeffs.len(),
            });
        }
        let mut acc = BitVec::zeros(self.cols);
        for i in 0..self.rows.len() {
            if coeffs.get(i) {
                acc.xor_assign(&self.rows[i]);
            }
        }
        Ok(acc)
    }

    /// Row rank by Gaussian elimination on a working copy.
    pub fn rank(&self) -> usize {
        self.echelon().1.len()
    }

    /// Minimum Hamming weight over all nonzero row combinations, found by
    /// walking the combinations in Gray-code order (one row XOR per step).
    ///
    /// Refuses matrices with more than [`EXHAUSTIVE_ROW_LIMIT`] rows; screen
    /// those probabilistically with random combinations instead.
    pub fn min_combination_weight(&self) -> Result<WeightReport, Gf2Error> {
        let m = self.rows.len();
        if m > EXHAUSTIVE_ROW_LIMIT {
            return Err(Gf2Error::ExhaustiveLimit { rows: m });
        }
        let mut acc = BitVec::zeros(self.cols);
        let mut prev_gray = 0u64;
        let mut best_weight = usize::MAX;
        let mut best_coeffs = 0u64;
        for x in 1u64..1u64 << m {
            let gray = x ^ (x >> 1);
            let changed = (gray ^ prev_gray).trailing_zeros() as usize;
            acc.xor_assign(&self.rows[changed]);
            prev_gray = gray;
            let w = acc.weight();
            if w < best_weight {
                best_weight = w;
                best_coeffs = gray;
                if w == 0 {
                    break;
                }
            }
        }
        Ok(WeightReport {
            min_weight: best_weight,
            witness: BitVec::from_fn(m, |i| best_coeffs >> i & 1 == 1),
            full_rank: self.rank() == m,
        })
    }

    /// Basis of the null space {u : K u = 0}, with r - m vectors for a
    /// full-row-rank m x r matrix. Errors on rank-deficient input.
    pub fn kernel_basis(&self) -> Result<Vec<BitVec>, Gf2Error> {
        let m = self.rows.len();
        let (reduced, pivot_cols) = self.echelon();
        if pivot_cols.len() < m {
            return Err(Gf2Error::RankDeficient {
                rank: pivot_cols.len(),
                rows: m,
            });
        }
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivot_cols {
            is_pivot[c] = true;
        }
        let mut basis = Vec::with_capacity(self.cols - m);
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut u = BitVec::zeros(self.cols);
            u.set(free, true);
            for (i, &pc) in pivot_cols.iter().enumerate() {
                if reduced[i].get(free) {
                    u.set(pc, true);
                }
            }
            basis.push(u);
        }
        Ok(basis)
    }

    /// Reduced row echelon form of a working copy, with the pivot column of
    /// each surviving row.
    fn echelon(&self) -> (Vec<BitVec>, Vec<usize>) {
        let mut rows = self.rows.clone();
        let mut pivot_cols = Vec::new();
        let mut next = 0usize;
        for col in 0..self.cols {
            if next == rows.len() {
                break;
            }
            let Some(p) = (next..rows.len()).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(next, p);
            let pivot = rows[next].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != next && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivot_cols.push(col);
            next += 1;
        }
        rows.truncate(pivot_cols.len());
        (rows, pivot_cols)
    }

    /// Textual form: a "m r" header line, then one row of `0`/`1` per line,
    /// newline-terminated. Bit 0 is the leftmost character.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows.len(), self.cols);
        for row in &self.rows {
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }

    /// Parse the [`to_text`](Self::to_text) format.
    pub fn parse_text(text: &str) -> Result<Self, Gf2Error> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Gf2Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let mut parts = header.split_whitespace();
        let parse_dim = |s: Option<&str>, what: &str| -> Result<usize, Gf2Error> {
            s.and_then(|t| t.parse().ok()).ok_or(Gf2Error::Parse {
                line: 1,
                msg: format!("header must be \"<rows> <cols>\", bad {what}"),
            })
        };
        let m = parse_dim(parts.next(), "row count")?;
        let r = parse_dim(parts.next(), "column count")?;
        if parts.next().is_some() {
            return Err(Gf2Error::Parse {
                line: 1,
                msg: "trailing tokens after header".into(),
            });
        }
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let line = lines.next().ok_or(Gf2Error::Parse {
                line: i + 2,
                msg: format!("expected {m} rows, found {i}"),
            })?;
            let row: BitVec = line.trim_end().parse().map_err(|_| Gf2Error::Parse {
                line: i + 2,
                msg: "rows must contain only 0 and 1".into(),
            })?;
            if row.len() != r {
                return Err(Gf2Error::Parse {
                    line: i + 2,
                    msg: format!("expected {r} columns, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Gf2Error::Parse {
                line: m + 2,
                msg: "trailing content after last row".into(),
            });
        }
        BitMatrix::from_rows(rows)
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix[{}x{}]", self.rows.len(), self.cols)
    }
}
