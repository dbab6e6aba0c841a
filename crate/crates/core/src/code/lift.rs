//! Lifting of base matrices into quasi-cyclic (or randomly permuted) codes.
//!
//! Lifting spec text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! lift_factor 10
//! base 42 52
//! punctured 0 1          # optional, base columns not transmitted
//! 0 0 9                  # base_row base_col shift
//! 0 1 117
//! ...
//! ```
//!
//! Every triple marks a nonzero base entry; it becomes the circulant
//! `sigma^shift` of size `lift_factor`. Unlisted entries become zero blocks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::ParityCheckMatrix;
use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// How each nonzero base entry is expanded.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockLift {
    /// Circulant `sigma^shift` per base entry.
    Circulant(BTreeMap<(usize, usize), usize>),
    /// Independent uniformly random permutation matrix per base entry.
    RandomPermutation { seed: u64 },
}

/// Expands every nonzero of `base` into a `lift_factor x lift_factor`
/// permutation block and every zero into an all-zero block.
pub fn lift_code(
    base: &ParityCheckMatrix,
    lift_factor: usize,
    lift: &BlockLift,
) -> Result<ParityCheckMatrix> {
    if lift_factor == 0 {
        return Err(Error::Lifting("lift factor must be positive".into()));
    }
    let z = lift_factor;
    let mut entries = Vec::with_capacity(base.num_entries() * z);
    match lift {
        BlockLift::Circulant(shifts) => {
            if let Some((&(r, c), _)) = shifts
                .iter()
                .find(|(&(r, c), _)| r >= base.rows() || c >= base.cols() || !base.get(r, c))
            {
                return Err(Error::Lifting(format!(
                    "shift given for ({r}, {c}) which is not a nonzero base entry"
                )));
            }
            for (r, c) in base.entries() {
                let &shift = shifts
                    .get(&(r, c))
                    .ok_or_else(|| Error::Lifting(format!("no shift for base entry ({r}, {c})")))?;
                if shift >= z {
                    return Err(Error::Lifting(format!(
                        "shift {shift} at ({r}, {c}) not below lift factor {z}"
                    )));
                }
                entries.extend((0..z).map(|i| (r * z + i, c * z + (i + shift) % z)));
            }
        }
        BlockLift::RandomPermutation { seed } => {
            for (idx, (r, c)) in base.entries().enumerate() {
                let mut rng = rng::stream(*seed, &[domain::LIFT, idx as u64]);
                let mut perm: Vec<usize> = (0..z).collect();
                perm.shuffle(&mut rng);
                entries.extend(
                    perm.iter()
                        .enumerate()
                        .map(|(i, &j)| (r * z + i, c * z + j)),
                );
            }
        }
    }
    ParityCheckMatrix::from_entries(base.rows() * z, base.cols() * z, entries)
}

/// Parsed lifting spec file.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSpec {
    pub base: ParityCheckMatrix,
    pub lift_factor: usize,
    pub shifts: BTreeMap<(usize, usize), usize>,
    /// Base columns that are punctured (not transmitted).
    pub punctured: Vec<usize>,
}

impl LiftSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lift_factor = None;
        let mut shape = None;
        let mut punctured = Vec::new();
        let mut shifts = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Lifting(format!("line {}: {msg}", lineno + 1));
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or_default();
            let nums = |toks: std::str::SplitWhitespace<'_>| -> Result<Vec<usize>> {
                toks.map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| err(&format!("bad number {t:?}")))
                })
                .collect()
            };
            match head {
                "lift_factor" => {
                    let v = nums(toks)?;
                    if v.len() != 1 {
                        return Err(err("lift_factor takes one value"));
                    }
                    lift_factor = Some(v[0]);
                }
                "base" => {
                    let v = nums(toks)?;
                    if v.len() != 2 {
                        return Err(err("base takes rows and cols"));
                    }
                    shape = Some((v[0], v[1]));
                }
                "punctured" => punctured.extend(nums(toks)?),
                _ => {
                    let v = nums(line.split_whitespace())?;
                    if v.len() != 3 {
                        return Err(err("expected `row col shift`"));
                    }
                    if shifts.insert((v[0], v[1]), v[2]).is_some() {
                        return Err(err("duplicate base entry"));
                    }
                }
            }
        }
        let lift_factor =
            lift_factor.ok_or_else(|| Error::Lifting("missing lift_factor".into()))?;
        let (rows, cols) = shape.ok_or_else(|| Error::Lifting("missing base shape".into()))?;
        if let Some(&p) = punctured.iter().find(|&&p| p >= cols) {
            return Err(Error::Lifting(format!("punctured column {p} out of range")));
        }
        punctured.sort_unstable();
        punctured.dedup();
        let base = ParityCheckMatrix::from_entries(rows, cols, shifts.keys().copied())?;
        Ok(Self {
            base,
            lift_factor,
            shifts,
            punctured,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lift_factor {}", self.lift_factor);
        let _ = writeln!(out, "base {} {}", self.base.rows(), self.base.cols());
        if !self.punctured.is_empty() {
            let cols: Vec<String> = self.punctured.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "punctured {}", cols.join(" "));
        }
        for (&(r, c), s) in &self.shifts {
            let _ = writeln!(out, "{r} {c} {s}");
        }
        out
    }

    pub fn lift(&self) -> Result<ParityCheckMatrix> {
        lift_code(
            &self.base,
            self.lift_factor,
            &BlockLift::Circulant(self.shifts.clone()),
        )
    }

    /// Variable-node indices of the lifted code that are punctured.
    pub fn punctured_vns(&self) -> Vec<usize> {
        let z = self.lift_factor;
        self.punctured
            .iter()
            .flat_map(|&c| c * z..(c + 1) * z)
            .collect()
    }

    /// Rate over transmitted bits: `(n - rank) / (n - punctured)`.
    pub fn transmitted_rate(&self, lifted: &ParityCheckMatrix) -> f64 {
        let n = lifted.cols();
        let sent = n - self.punctured_vns().len();
        (n - lifted.rank_gf2()) as f64 / sent as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_2x2() -> ParityCheckMatrix {
        ParityCheckMatrix::from_entries(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap()
    }

    #[test]
    fn toy_circulant_lift() {
        let shifts = BTreeMap::from([((0, 0), 1), ((1, 0), 0), ((1, 1), 1)]);
        let h = lift_code(&base_2x2(), 2, &BlockLift::Circulant(shifts)).unwrap();
        let expected = vec![
            vec![0, 1, 0, 0],
            vec![1, 0, 0, 0],
            vec![1, 0, 0, 1],
            vec![0, 1, 1, 0],
        ];
        assert_eq!(h.to_dense(), expected);
    }

    #[test]
    fn identity_lift_returns_base() {
        let base = base_2x2();
        let shifts = base.entries().map(|e| (e, 0)).collect();
        assert_eq!(
            lift_code(&base, 1, &BlockLift::Circulant(shifts)).unwrap(),
            base
        );
    }

    #[test]
    fn lift_errors() {
        let base = base_2x2();
        let missing = BTreeMap::from([((0, 0), 1), ((1, 0), 0)]);
        assert!(lift_code(&base, 2, &BlockLift::Circulant(missing)).is_err());
        let too_big = BTreeMap::from([((0, 0), 2), ((1, 0), 0), ((1, 1), 1)]);
        assert!(lift_code(&base, 2, &BlockLift::Circulant(too_big)).is_err());
        let extra = BTreeMap::from([((0, 0), 0), ((0, 1), 0), ((1, 0), 0), ((1, 1), 1)]);
        assert!(lift_code(&base, 2, &BlockLift::Circulant(extra)).is_err());
    }

    #[test]
    fn random_permutation_lift_preserves_weights() {
        let base = super::super::build_ab_code(3, 5).unwrap();
        let h = lift_code(&base, 7, &BlockLift::RandomPermutation { seed: 3 }).unwrap();
        assert_eq!((h.rows(), h.cols()), (105, 175));
        assert!(h.row_weights().iter().all(|&w| w == 5));
        assert!(h.col_weights().iter().all(|&w| w == 3));
        let again = lift_code(&base, 7, &BlockLift::RandomPermutation { seed: 3 }).unwrap();
        assert_eq!(h, again);
    }

    #[test]
    fn spec_file_round_trip() {
        let text = "# toy\nlift_factor 2\nbase 2 2\npunctured 1\n0 0 1\n1 0 0\n1 1 1\n";
        let spec = LiftSpec::parse(text).unwrap();
        assert_eq!(spec.punctured_vns(), vec![2, 3]);
        assert_eq!(LiftSpec::parse(&spec.render()).unwrap(), spec);
        assert_eq!(spec.lift().unwrap().rows(), 4);
        assert!(LiftSpec::parse("base 2 2\n0 0 1\n").is_err());
        assert!(LiftSpec::parse("lift_factor 2\nbase 2 2\n0 0 1\n0 0 1\n").is_err());
    }
}
