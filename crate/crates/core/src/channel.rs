//! BPSK over AWGN, channel LLRs and training/evaluation datasets.
//!
//! Bit 0 maps to +1, bit 1 to -1, and LLRs are `log P(0|y) / P(1|y) = 2y/σ²`,
//! so a non-negative LLR decides bit 0.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Dataset file format version.
pub const DATASET_VERSION: u32 = 1;

/// Channel LLRs for one received block.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(pub Vec<f64>);

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite LLR".into()));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Strictly increasing list of `E_b/N_0` points in dB.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SnrGrid(Vec<f64>);

impl SnrGrid {
    pub fn new(values_db: Vec<f64>) -> Result<Self> {
        if values_db.is_empty() {
            return Err(Error::InvalidArgument("SNR grid is empty".into()));
        }
        if values_db.iter().any(|v| !v.is_finite()) || values_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "SNR grid must be finite and strictly increasing: {values_db:?}"
            )));
        }
        Ok(Self(values_db))
    }

    pub fn values_db(&self) -> &[f64] {
        &self.0
    }

    /// Number of SNR tasks `K`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<f64>> for SnrGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SnrGrid> for Vec<f64> {
    fn from(g: SnrGrid) -> Self {
        g.0
    }
}

/// Noise variance for `E_b/N_0 = ebn0_db` at code rate `rate`:
/// `σ² = 1 / (2 R 10^(ebn0/10))`.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} outside (0, 1)"
        )));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

#[inline]
pub fn llr_from_observation(y: f64, sigma2: f64) -> f64 {
    2.0 * y / sigma2
}

/// BPSK-modulates `bits`, adds `N(0, σ²)` noise and returns channel LLRs.
pub fn transmit<R: Rng + ?Sized>(bits: &[u8], sigma2: f64, rng: &mut R) -> LlrVector {
    assert!(sigma2 > 0.0, "noise variance must be positive");
    let sigma = sigma2.sqrt();
    LlrVector(
        bits.iter()
            .map(|&b| {
                let x = if b & 1 == 0 { 1.0 } else { -1.0 };
                let noise: f64 = rng.sample(StandardNormal);
                llr_from_observation(x + sigma * noise, sigma2)
            })
            .collect(),
    )
}

/// Transmits the all-zero codeword of length `n`.
pub fn transmit_all_zero<R: Rng + ?Sized>(n: usize, sigma2: f64, rng: &mut R) -> LlrVector {
    assert!(sigma2 > 0.0, "noise variance must be positive");
    let sigma = sigma2.sqrt();
    LlrVector(
        (0..n)
            .map(|_| {
                let noise: f64 = rng.sample(StandardNormal);
                llr_from_observation(1.0 + sigma * noise, sigma2)
            })
            .collect(),
    )
}

/// Zeroes the LLRs of punctured (untransmitted) positions.
pub fn puncture(llr: &mut LlrVector, punctured: &[usize]) {
    for &v in punctured {
        llr.0[v] = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    /// One shuffled set with an equal share of every SNR.
    Mixed,
    /// One set per SNR.
    PerSnr,
}

/// One LLR vector tagged with the SNR task it was drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub snr_index: usize,
    pub ebn0_db: f64,
    pub llr: LlrVector,
}

/// A set of LLR vectors plus the metadata needed to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub code_id: String,
    pub grid: SnrGrid,
    pub seed: u64,
    pub rate: f64,
    /// Distinguishes independent draws made from the same master seed.
    pub stream: u64,
    pub samples: Vec<Sample>,
}

/// Parameters shared by every dataset drawn for one code.
#[derive(Debug, Clone)]
pub struct DatasetSpec<'a> {
    pub code_id: &'a str,
    pub block_length: usize,
    pub rate: f64,
    pub grid: &'a SnrGrid,
    pub seed: u64,
}

impl DatasetSpec<'_> {
    /// Draws `per_snr_count` vectors at each grid point. Vector `i` of task
    /// `k` comes from its own stream `(seed, stream, k, i)`, so generation is
    /// independent of thread count.
    pub fn generate(
        &self,
        per_snr_count: usize,
        mixing: Mixing,
        stream: u64,
    ) -> Result<Vec<Dataset>> {
        if per_snr_count == 0 {
            return Err(Error::InvalidArgument(
                "per-SNR count must be at least 1".into(),
            ));
        }
        let per_task: Vec<Vec<Sample>> = self
            .grid
            .values_db()
            .iter()
            .enumerate()
            .map(|(k, &db)| {
                let sigma2 = noise_variance(db, self.rate)?;
                Ok((0..per_snr_count)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng =
                            rng::stream(self.seed, &[domain::CHANNEL, stream, k as u64, i as u64]);
                        Sample {
                            snr_index: k,
                            ebn0_db: db,
                            llr: transmit_all_zero(self.block_length, sigma2, &mut rng),
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        let wrap = |samples| Dataset {
            code_id: self.code_id.to_string(),
            grid: self.grid.clone(),
            seed: self.seed,
            rate: self.rate,
            stream,
            samples,
        };
        Ok(match mixing {
            Mixing::PerSnr => per_task.into_iter().map(wrap).collect(),
            Mixing::Mixed => {
                let mut all: Vec<Sample> = per_task.into_iter().flatten().collect();
                all.shuffle(&mut rng::stream(self.seed, &[domain::SHUFFLE, stream]));
                vec![wrap(all)]
            }
        })
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with `#` header lines: one row per vector, `snr_index,ebn0_db,l_0,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# reldec-dataset v{DATASET_VERSION}");
        let _ = writeln!(out, "# code {}", self.code_id);
        let grid: Vec<String> = self
            .grid
            .values_db()
            .iter()
            .map(|v| v.to_string())
            .collect();
        let _ = writeln!(out, "# snr_grid {}", grid.join(" "));
        let _ = writeln!(out, "# seed {}", self.seed);
        let _ = writeln!(out, "# stream {}", self.stream);
        let _ = writeln!(out, "# rate {}", self.rate);
        let _ = writeln!(out, "# llr_convention 2y/sigma2");
        for s in &self.samples {
            let _ = write!(out, "{},{}", s.snr_index, s.ebn0_db);
            for v in s.llr.as_slice() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Dataset(msg);
        let mut header = std::collections::HashMap::new();
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                header.insert(k.to_string(), v.to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse_err = |what: &str| bad(format!("line {}: bad {what}", lineno + 1));
            let snr_index: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| parse_err("snr index"))?;
            let ebn0_db: f64 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| parse_err("snr"))?;
            let values = fields
                .map(|f| f.parse::<f64>().map_err(|_| parse_err("llr")))
                .collect::<Result<Vec<_>>>()?;
            samples.push(Sample {
                snr_index,
                ebn0_db,
                llr: LlrVector::new(values)?,
            });
        }
        if header.get("reldec-dataset").map(String::as_str) != Some(&format!("v{DATASET_VERSION}"))
        {
            return Err(bad("missing or unsupported dataset version header".into()));
        }
        let get = |k: &str| {
            header
                .get(k)
                .ok_or_else(|| bad(format!("missing header {k}")))
        };
        let grid = SnrGrid::new(
            get("snr_grid")?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad snr_grid".into())))
                .collect::<Result<_>>()?,
        )?;
        let ds = Dataset {
            code_id: get("code")?.clone(),
            grid,
            seed: get("seed")?.parse().map_err(|_| bad("bad seed".into()))?,
            stream: get("stream")?
                .parse()
                .map_err(|_| bad("bad stream".into()))?,
            rate: get("rate")?.parse().map_err(|_| bad("bad rate".into()))?,
            samples,
        };
        if let Some(s) = ds.samples.iter().find(|s| s.snr_index >= ds.grid.len()) {
            return Err(bad(format!("snr index {} outside grid", s.snr_index)));
        }
        if let Some(first) = ds.samples.first() {
            if ds.samples.iter().any(|s| s.llr.len() != first.llr.len()) {
                return Err(bad("LLR vectors of differing length".into()));
            }
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_variance_values() {
        assert!((noise_variance(3.0103, 0.5).unwrap() - 0.5).abs() < 1e-5);
        assert_eq!(noise_variance(0.0, 0.5).unwrap(), 1.0);
        assert!((noise_variance(0.0, 0.2).unwrap() - 2.5).abs() < 1e-15);
        assert!(noise_variance(0.0, 1.0).is_err());
        assert!(noise_variance(0.0, 0.0).is_err());
    }

    #[test]
    fn llr_values() {
        assert_eq!(llr_from_observation(1.0, 1.0), 2.0);
        assert_eq!(llr_from_observation(0.0, 0.3), 0.0);
        assert_eq!(llr_from_observation(-0.5, 0.5), -2.0);
    }

    #[test]
    fn noiseless_limit_decides_zero() {
        let mut rng = rng::stream(1, &[]);
        let llr = transmit_all_zero(1000, 1e-9, &mut rng);
        assert!(llr.as_slice().iter().all(|&l| l > 0.0));
        let llr = transmit(&[1, 0, 1], 1e-9, &mut rng);
        assert!(llr.0[0] < 0.0 && llr.0[1] > 0.0 && llr.0[2] < 0.0);
    }

    #[test]
    fn same_seed_same_vector() {
        let a = transmit_all_zero(50, 0.7, &mut rng::stream(9, &[1]));
        let b = transmit_all_zero(50, 0.7, &mut rng::stream(9, &[1]));
        assert_eq!(a, b);
    }

    #[test]
    fn llr_moments() {
        // mean 2/σ², variance 4/σ² at σ² = 1
        let n = 100_000;
        let llr = transmit_all_zero(n, 1.0, &mut rng::stream(42, &[]));
        let mean = llr.0.iter().sum::<f64>() / n as f64;
        let var = llr.0.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
        // standard error of the mean is 2/sqrt(n)
        assert!(
            (mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt(),
            "mean {mean}"
        );
        // variance of the sample variance for a normal: 2σ⁴/(n-1), σ⁴ = 16
        let se_var = (2.0 * 16.0 / (n - 1) as f64).sqrt();
        assert!((var - 4.0).abs() < 3.0 * se_var, "var {var}");
    }

    fn spec(grid: &SnrGrid) -> DatasetSpec<'_> {
        DatasetSpec {
            code_id: "toy",
            block_length: 8,
            rate: 0.5,
            grid,
            seed: 5,
        }
    }

    #[test]
    fn dataset_sizes() {
        let grid = SnrGrid::new(vec![1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        let mixed = spec(&grid).generate(30, Mixing::Mixed, 0).unwrap();
        assert_eq!(mixed.len(), 1);
        assert_eq!(mixed[0].len(), 150);
        for k in 0..5 {
            assert_eq!(
                mixed[0].samples.iter().filter(|s| s.snr_index == k).count(),
                30
            );
        }
        let per = spec(&grid).generate(7, Mixing::PerSnr, 0).unwrap();
        assert_eq!(per.len(), 5);
        assert!(per.iter().all(|d| d.len() == 7));
        assert!(spec(&grid).generate(0, Mixing::Mixed, 0).is_err());
    }

    #[test]
    fn paper_dataset_size() {
        let grid = SnrGrid::new(vec![1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        let big = DatasetSpec {
            block_length: 1,
            ..spec(&grid)
        };
        assert_eq!(
            big.generate(3000, Mixing::Mixed, 0).unwrap()[0].len(),
            15_000
        );
    }

    #[test]
    fn single_task_mixing_coincides_as_sets() {
        let grid = SnrGrid::new(vec![2.0]).unwrap();
        let mixed = spec(&grid)
            .generate(20, Mixing::Mixed, 3)
            .unwrap()
            .remove(0);
        let per = spec(&grid)
            .generate(20, Mixing::PerSnr, 3)
            .unwrap()
            .remove(0);
        let key = |s: &Sample| s.llr.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let mut a: Vec<_> = mixed.samples.iter().map(key).collect();
        let mut b: Vec<_> = per.samples.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn generation_independent_of_thread_count() {
        let grid = SnrGrid::new(vec![1.0, 2.0]).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| spec(&grid).generate(40, Mixing::Mixed, 1).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = SnrGrid::new(vec![1.0, 2.5]).unwrap();
        let ds = spec(&grid).generate(4, Mixing::Mixed, 2).unwrap().remove(0);
        let back = Dataset::from_csv(&ds.to_csv()).unwrap();
        assert_eq!(back, ds);
        assert!(Dataset::from_csv("1,2,3\n").is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SnrGrid::new(vec![]).is_err());
        assert!(SnrGrid::new(vec![2.0, 1.0]).is_err());
        assert!(SnrGrid::new(vec![1.0, 1.0]).is_err());
    }
}
