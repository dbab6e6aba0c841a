use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Sparse binary parity-check matrix.
///
/// Entries are kept sorted row-major and unique. Every row and column holds
/// at least one entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from `(row, col)` positions holding a one.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        let mut row_entries = vec![Vec::new(); rows];
        for (r, c) in entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            row_entries[r].push(c);
        }
        let mut col_weight = vec![0usize; cols];
        for (r, row) in row_entries.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMatrix(format!("duplicate entry in row {r}")));
            }
            if row.is_empty() {
                return Err(Error::InvalidMatrix(format!("row {r} has no entries")));
            }
            for &c in row.iter() {
                col_weight[c] += 1;
            }
        }
        if let Some(c) = col_weight.iter().position(|&w| w == 0) {
            return Err(Error::InvalidMatrix(format!("column {c} has no entries")));
        }
        Ok(Self {
            rows,
            cols,
            row_entries,
        })
    }

    /// Number of check nodes `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of variable nodes `n` (block length).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_entries(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    /// Column indices of the ones in row `r`, ascending.
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_entries[r]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_entries[r].binary_search(&c).is_ok()
    }

    /// All entries, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_entries
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&c| (r, c)))
    }

    /// Column index lists, each ascending.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.cols];
        for (r, c) in self.entries() {
            cols[c].push(r);
        }
        cols
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.row_entries.iter().map(Vec::len).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for (_, c) in self.entries() {
            w[c] += 1;
        }
        w
    }

    /// Rank over GF(2), by Gaussian elimination on packed rows.
    pub fn rank_gf2(&self) -> usize {
        let words = self.cols.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = self
            .row_entries
            .iter()
            .map(|row| {
                let mut bits = vec![0u64; words];
                for &c in row {
                    bits[c / 64] |= 1 << (c % 64);
                }
                bits
            })
            .collect();
        let mut rank = 0;
        for col in 0..self.cols {
            let (w, b) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    /// Design rate `(n - rank(H)) / n`.
    pub fn rate(&self) -> f64 {
        (self.cols - self.rank_gf2()) as f64 / self.cols as f64
    }

    /// True iff `H x = 0` over GF(2).
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        self.row_entries
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) == 0)
    }

    /// SHA-256 over a canonical text rendering of the shape and entries.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{} {}\n", self.rows, self.cols));
        for row in &self.row_entries {
            for c in row {
                hasher.update(format!("{c} "));
            }
            hasher.update("\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Dense 0/1 rendering, mainly for tests and debugging.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.cols]; self.rows];
        for (r, c) in self.entries() {
            dense[r][c] = 1;
        }
        dense
    }
}
