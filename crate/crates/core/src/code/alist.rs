//! Reader and writer for the alist sparse-matrix format.
//!
//! ```text
//! n m
//! max_col_weight max_row_weight
//! col weights (n values)
//! row weights (m values)
//! n lines: 1-based row indices of each column (zero padded)
//! m lines: 1-based column indices of each row (zero padded)
//! ```
//!
//! Zero padding is optional on input; zeros are skipped wherever an index
//! is expected.

use std::fmt::Write as _;

use super::ParityCheckMatrix;
use crate::error::{Error, Result};

struct Tokens<'a> {
    inner: std::str::SplitWhitespace<'a>,
}

impl Tokens<'_> {
    fn next_num(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .inner
            .next()
            .ok_or_else(|| Error::Alist(format!("truncated file while reading {what}")))?;
        tok.parse()
            .map_err(|_| Error::Alist(format!("bad integer {tok:?} in {what}")))
    }

    /// Reads `count` nonzero indices, skipping zero padding before each.
    fn next_indices(&mut self, count: usize, what: &str) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = self.next_num(what)?;
            if v != 0 {
                out.push(v);
            }
        }
        Ok(out)
    }
}

pub fn load_alist(text: &str) -> Result<ParityCheckMatrix> {
    let mut t = Tokens {
        inner: text.split_whitespace(),
    };
    let n = t.next_num("n")?;
    let m = t.next_num("m")?;
    if n == 0 || m == 0 {
        return Err(Error::Alist(format!("empty shape {m}x{n}")));
    }
    let max_col = t.next_num("max column weight")?;
    let max_row = t.next_num("max row weight")?;
    let col_w: Vec<usize> = (0..n)
        .map(|_| t.next_num("column weights"))
        .collect::<Result<_>>()?;
    let row_w: Vec<usize> = (0..m)
        .map(|_| t.next_num("row weights"))
        .collect::<Result<_>>()?;
    if let Some(c) = col_w.iter().position(|&w| w == 0) {
        return Err(Error::Alist(format!("column {c} declared with weight 0")));
    }
    if let Some(r) = row_w.iter().position(|&w| w == 0) {
        return Err(Error::Alist(format!("row {r} declared with weight 0")));
    }
    if col_w.iter().max() != Some(&max_col) || row_w.iter().max() != Some(&max_row) {
        return Err(Error::Alist(
            "declared maximum weights disagree with weight lists".into(),
        ));
    }
    let mut from_cols = Vec::new();
    for (c, &w) in col_w.iter().enumerate() {
        for r in t.next_indices(w, "column lists")? {
            if r > m {
                return Err(Error::Alist(format!(
                    "row index {r} out of range in column {c}"
                )));
            }
            from_cols.push((r - 1, c));
        }
    }
    let mut from_rows = Vec::new();
    for (r, &w) in row_w.iter().enumerate() {
        for c in t.next_indices(w, "row lists")? {
            if c > n {
                return Err(Error::Alist(format!(
                    "column index {c} out of range in row {r}"
                )));
            }
            from_rows.push((r, c - 1));
        }
    }
    // trailing zero padding is fine, anything else is not
    if t.inner.any(|tok| tok != "0") {
        return Err(Error::Alist("trailing data after row lists".into()));
    }
    from_cols.sort_unstable();
    from_rows.sort_unstable();
    if from_cols != from_rows {
        return Err(Error::Alist("column lists and row lists disagree".into()));
    }
    ParityCheckMatrix::from_entries(m, n, from_rows).map_err(|e| Error::Alist(e.to_string()))
}

pub fn write_alist(h: &ParityCheckMatrix) -> String {
    let cols = h.columns();
    let col_w = h.col_weights();
    let row_w = h.row_weights();
    let max_col = col_w.iter().copied().max().unwrap_or(0);
    let max_row = row_w.iter().copied().max().unwrap_or(0);
    let join =
        |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let padded = |list: &[usize], width: usize| {
        let mut it = list
            .iter()
            .map(|&x| x + 1)
            .chain(std::iter::repeat_n(0, width - list.len()));
        join(&mut it)
    };
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", h.cols(), h.rows());
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut col_w.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut row_w.iter().copied()));
    for col in &cols {
        let _ = writeln!(out, "{}", padded(col, max_col));
    }
    for r in 0..h.rows() {
        let _ = writeln!(out, "{}", padded(h.row(r), max_row));
    }
    out
}
