use rand::Rng;
use serde::{Deserialize, Serialize};

use super::peg::TannerGraph;
use super::CodeError;
use crate::gf::{GfTable, Symbol};

/// Sparse m x n parity-check matrix over GF(q).
///
/// Rows are stored sorted by column; every stored weight is nonzero and every
/// row and column has at least one entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityCheck {
    gf: GfTable,
    n: usize,
    rows: Vec<Vec<(u32, Symbol)>>,
}

/// `s = H x`, one symbol per check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome(Vec<Symbol>);

impl Syndrome {
    pub fn new(values: Vec<Symbol>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Symbol-wise field addition.
    pub fn add(&self, other: &Syndrome) -> Syndrome {
        Syndrome(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }
}

impl SparseParityCheck {
    pub fn new(gf: GfTable, n: usize, rows: Vec<Vec<(u32, Symbol)>>) -> Result<Self, CodeError> {
        let mut rows = rows;
        let mut col_used = vec![false; n];
        for (r, row) in rows.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(CodeError::EmptyRow(r));
            }
            row.sort_unstable_by_key(|e| e.0);
            for (k, &(c, w)) in row.iter().enumerate() {
                let c = c as usize;
                if c >= n {
                    return Err(CodeError::ColumnOutOfRange { row: r, col: c, n });
                }
                if w == 0 || !gf.contains(w as usize) {
                    return Err(CodeError::WeightOutOfRange {
                        row: r,
                        col: c,
                        weight: w as usize,
                        q: gf.q(),
                    });
                }
                if k > 0 && row[k - 1].0 as usize == c {
                    return Err(CodeError::DuplicateEntry { row: r, col: c });
                }
                col_used[c] = true;
            }
        }
        if let Some(c) = col_used.iter().position(|&u| !u) {
            return Err(CodeError::EmptyColumn(c));
        }
        Ok(Self { gf, n, rows })
    }

    /// From a dense row-major matrix of field elements (zeros are skipped).
    pub fn from_dense(q: usize, dense: &[Vec<Symbol>]) -> Result<Self, CodeError> {
        let gf = GfTable::new(q)?;
        let n = dense.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(dense.len());
        for (r, row) in dense.iter().enumerate() {
            if row.len() != n {
                return Err(CodeError::RaggedDense { row: r });
            }
            rows.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0)
                    .map(|(c, &w)| (c as u32, w))
                    .collect(),
            );
        }
        Self::new(gf, n, rows)
    }

    pub fn gf(&self) -> &GfTable {
        &self.gf
    }

    pub fn q(&self) -> usize {
        self.gf.q()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// `1 - m/n`.
    pub fn rate(&self) -> f64 {
        1.0 - self.m() as f64 / self.n as f64
    }

    pub fn rows(&self) -> &[Vec<(u32, Symbol)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(u32, Symbol)] {
        &self.rows[i]
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for row in &self.rows {
            for &(c, _) in row {
                d[c as usize] += 1;
            }
        }
        d
    }

    pub fn topology(&self) -> TannerGraph {
        let rows: Vec<Vec<usize>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|e| e.0 as usize).collect())
            .collect();
        TannerGraph::from_rows(self.n, &rows).expect("validated matrix")
    }

    pub fn syndrome(&self, x: &[Symbol]) -> Result<Syndrome, CodeError> {
        self.check_word(x)?;
        Ok(Syndrome(self.rows.iter().map(|row| self.row_sum(row, x)).collect()))
    }

    /// `H x == s` without allocating. Panics on length mismatch in debug builds.
    pub fn satisfies(&self, x: &[Symbol], s: &Syndrome) -> bool {
        debug_assert_eq!(x.len(), self.n);
        self.rows
            .iter()
            .zip(s.values())
            .all(|(row, &si)| self.row_sum(row, x) == si)
    }

    fn row_sum(&self, row: &[(u32, Symbol)], x: &[Symbol]) -> Symbol {
        row.iter().fold(0, |acc, &(c, w)| acc ^ self.gf.mul(w, x[c as usize]))
    }

    pub(crate) fn check_word(&self, x: &[Symbol]) -> Result<(), CodeError> {
        if x.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|&s| !self.gf.contains(s as usize)) {
            return Err(CodeError::SymbolOutOfRange {
                position: pos,
                symbol: x[pos] as usize,
                q: self.q(),
            });
        }
        Ok(())
    }
}

/// Draws every edge weight independently and uniformly from `1..q`.
pub fn assign_edge_weights<R: Rng + ?Sized>(
    topology: &TannerGraph,
    q: usize,
    rng: &mut R,
) -> Result<SparseParityCheck, CodeError> {
    let gf = GfTable::new(q)?;
    let rows = (0..topology.m())
        .map(|c| {
            let mut row: Vec<(u32, Symbol)> = topology.chk_neighbors(c).iter().map(|&v| (v, 0)).collect();
            row.sort_unstable_by_key(|e| e.0);
            for e in &mut row {
                e.1 = rng.random_range(1..q) as Symbol;
            }
            row
        })
        .collect();
    SparseParityCheck::new(gf, topology.n(), rows)
}
