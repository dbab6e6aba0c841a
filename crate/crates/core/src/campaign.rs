//! Monte Carlo BER/FER/message-count campaigns over an SNR grid.
//!
//! Frame `f` at grid point `k` draws its noise from stream
//! `(seed, CHANNEL-eval, k, f)` and its scheduling randomness from
//! `(seed, DECODE, k, f)`. Frames are decoded in parallel blocks but
//! accumulated strictly in index order, and a grid point stops at the exact
//! frame that meets the stop rule, so results do not depend on the number of
//! workers. Two campaigns with the same seed see identical noise, which makes
//! scheduler comparisons paired.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{noise_variance, transmit_all_zero, SnrGrid};
use crate::code::LdpcCode;
use crate::decode::{Decoder, DecoderConfig, Scheduler};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

pub const CAMPAIGN_HEADER: &str = "# reldec-campaign v1";

const COLUMNS: &str = "ebn0_db,frames,bit_errors,frame_errors,ber,fer,ber_ci95,fer_ci95,\
avg_messages,avg_messages_ci95,avg_messages_erroneous,avg_iterations";

/// Channel draws for campaigns live apart from training-set draws.
const EVAL_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub grid: SnrGrid,
    pub stop: StopRule,
    pub decoder: DecoderConfig,
    pub seed: u64,
    pub workers: usize,
    /// Positions whose LLRs are zeroed before decoding.
    pub punctured: Vec<usize>,
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bit_errors: u64,
    pub iterations: usize,
    pub converged: bool,
    pub messages: u64,
}

impl FrameOutcome {
    pub fn frame_error(&self) -> bool {
        self.bit_errors > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub ber_ci95: f64,
    pub fer_ci95: f64,
    pub avg_messages: f64,
    pub avg_messages_ci95: f64,
    /// Mean message count over erroneous frames only (NaN if none).
    pub avg_messages_erroneous: f64,
    pub avg_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub code_fingerprint: String,
    pub scheduler: String,
    pub block_length: usize,
    pub seed: u64,
    pub rows: Vec<CampaignRow>,
}

const Z95: f64 = 1.96;

impl CampaignRow {
    fn from_outcomes(ebn0_db: f64, n: usize, frames: &[FrameOutcome]) -> Self {
        let count = frames.len() as u64;
        let bit_errors: u64 = frames.iter().map(|f| f.bit_errors).sum();
        let frame_errors = frames.iter().filter(|f| f.frame_error()).count() as u64;
        let cf = count as f64;
        let bits = cf * n as f64;
        let ber = bit_errors as f64 / bits;
        let fer = frame_errors as f64 / cf;
        let msgs: Vec<f64> = frames.iter().map(|f| f.messages as f64).collect();
        let avg_messages = msgs.iter().sum::<f64>() / cf;
        let var = if count > 1 {
            msgs.iter().map(|m| (m - avg_messages).powi(2)).sum::<f64>() / (cf - 1.0)
        } else {
            0.0
        };
        let err_msgs: Vec<f64> = frames
            .iter()
            .filter(|f| f.frame_error())
            .map(|f| f.messages as f64)
            .collect();
        Self {
            ebn0_db,
            frames: count,
            bit_errors,
            frame_errors,
            ber,
            fer,
            ber_ci95: Z95 * (ber * (1.0 - ber) / bits).sqrt(),
            fer_ci95: Z95 * (fer * (1.0 - fer) / cf).sqrt(),
            avg_messages,
            avg_messages_ci95: Z95 * (var / cf).sqrt(),
            avg_messages_erroneous: if err_msgs.is_empty() {
                f64::NAN
            } else {
                err_msgs.iter().sum::<f64>() / err_msgs.len() as f64
            },
            avg_iterations: frames.iter().map(|f| f.iterations as f64).sum::<f64>() / cf,
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn simulate_range(
    code: &LdpcCode,
    scheduler: &Scheduler<'_>,
    cfg: &CampaignConfig,
    snr_index: usize,
    sigma2: f64,
    range: std::ops::Range<u64>,
) -> Result<Vec<FrameOutcome>> {
    let n = code.block_length();
    range
        .into_par_iter()
        .map_init(
            || Decoder::new(code, cfg.decoder),
            |decoder, f| {
                let decoder = decoder
                    .as_mut()
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let k = snr_index as u64;
                let mut noise = rng::stream(cfg.seed, &[domain::CHANNEL, EVAL_STREAM, k, f]);
                let mut llr = transmit_all_zero(n, sigma2, &mut noise);
                for &p in &cfg.punctured {
                    llr.0[p] = 0.0;
                }
                let mut sched_rng = rng::stream(cfg.seed, &[domain::DECODE, k, f]);
                let (bit_errors, iterations, converged, messages) =
                    decoder.decode_errors(llr.as_slice(), scheduler, &mut sched_rng)?;
                Ok(FrameOutcome {
                    bit_errors,
                    iterations,
                    converged,
                    messages,
                })
            },
        )
        .collect()
}

fn check_config(code: &LdpcCode, cfg: &CampaignConfig) -> Result<()> {
    if cfg.stop.min_frame_errors == 0 || cfg.stop.max_frames == 0 {
        return Err(Error::InvalidArgument(
            "stop rule bounds must be positive".into(),
        ));
    }
    if let Some(&p) = cfg.punctured.iter().find(|&&p| p >= code.block_length()) {
        return Err(Error::InvalidArgument(format!(
            "punctured position {p} out of range"
        )));
    }
    Ok(())
}

/// Simulates exactly `frames` frames at grid point `snr_index`, returning
/// per-frame outcomes in frame order (for paired comparisons).
pub fn simulate_frames(
    code: &LdpcCode,
    scheduler: &Scheduler<'_>,
    cfg: &CampaignConfig,
    snr_index: usize,
    frames: u64,
) -> Result<Vec<FrameOutcome>> {
    check_config(code, cfg)?;
    let db = *cfg
        .grid
        .values_db()
        .get(snr_index)
        .ok_or_else(|| Error::InvalidArgument(format!("no grid point {snr_index}")))?;
    let sigma2 = noise_variance(db, code.rate())?;
    pool(cfg.workers)?
        .install(|| simulate_range(code, scheduler, cfg, snr_index, sigma2, 0..frames))
}

/// Runs the stop rule at every grid point. `schedulers` holds either one
/// scheduler for all points or one per grid point.
pub fn run_campaign(
    code: &LdpcCode,
    schedulers: &[Scheduler<'_>],
    cfg: &CampaignConfig,
) -> Result<CampaignResult> {
    check_config(code, cfg)?;
    let grid = cfg.grid.values_db();
    if schedulers.len() != 1 && schedulers.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} schedulers for {} grid points",
            schedulers.len(),
            grid.len()
        )));
    }
    let pool = pool(cfg.workers)?;
    let block = (256 * cfg.workers.max(1)) as u64;
    let mut rows = Vec::with_capacity(grid.len());
    for (k, &db) in grid.iter().enumerate() {
        let scheduler = &schedulers[k.min(schedulers.len() - 1)];
        let sigma2 = noise_variance(db, code.rate())?;
        let mut kept: Vec<FrameOutcome> = Vec::new();
        let mut errors = 0;
        'frames: while (kept.len() as u64) < cfg.stop.max_frames {
            let start = kept.len() as u64;
            let end = (start + block).min(cfg.stop.max_frames);
            let outcomes =
                pool.install(|| simulate_range(code, scheduler, cfg, k, sigma2, start..end))?;
            for o in outcomes {
                kept.push(o);
                errors += u64::from(o.frame_error());
                if errors >= cfg.stop.min_frame_errors {
                    break 'frames;
                }
            }
        }
        rows.push(CampaignRow::from_outcomes(db, code.block_length(), &kept));
    }
    Ok(CampaignResult {
        code_fingerprint: code.fingerprint().to_string(),
        scheduler: schedulers[0].name().to_string(),
        block_length: code.block_length(),
        seed: cfg.seed,
        rows,
    })
}

impl CampaignResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{CAMPAIGN_HEADER}\n# code={}\n# scheduler={}\n# block_length={}\n# seed={}\n{COLUMNS}\n",
            self.code_fingerprint, self.scheduler, self.block_length, self.seed
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.ebn0_db,
                r.frames,
                r.bit_errors,
                r.frame_errors,
                r.ber,
                r.fer,
                r.ber_ci95,
                r.fer_ci95,
                r.avg_messages,
                r.avg_messages_ci95,
                r.avg_messages_erroneous,
                r.avg_iterations
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("campaign CSV: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(CAMPAIGN_HEADER) {
            return Err(bad("missing version header"));
        }
        let mut meta = |key: &str| -> Result<String> {
            lines
                .next()
                .and_then(|l| l.strip_prefix("# "))
                .and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("missing {key}")))
        };
        let code_fingerprint = meta("code")?;
        let scheduler = meta("scheduler")?;
        let block_length = meta("block_length")?
            .parse()
            .map_err(|_| bad("block_length"))?;
        let seed = meta("seed")?.parse().map_err(|_| bad("seed"))?;
        if lines.next() != Some(COLUMNS) {
            return Err(bad("unexpected columns"));
        }
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() != 12 {
                    return Err(bad("wrong field count"));
                }
                let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(f[i]));
                let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad(f[i]));
                Ok(CampaignRow {
                    ebn0_db: num(0)?,
                    frames: int(1)?,
                    bit_errors: int(2)?,
                    frame_errors: int(3)?,
                    ber: num(4)?,
                    fer: num(5)?,
                    ber_ci95: num(6)?,
                    fer_ci95: num(7)?,
                    avg_messages: num(8)?,
                    avg_messages_ci95: num(9)?,
                    avg_messages_erroneous: num(10)?,
                    avg_iterations: num(11)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            code_fingerprint,
            scheduler,
            block_length,
            seed,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_ab_code, ClusterMethod};

    fn ab() -> LdpcCode {
        LdpcCode::new(build_ab_code(3, 5).unwrap(), 1, ClusterMethod::Sequential).unwrap()
    }

    fn config(workers: usize, early_stop: bool) -> CampaignConfig {
        CampaignConfig {
            grid: SnrGrid::new(vec![1.0, 2.0, 3.0]).unwrap(),
            stop: StopRule {
                min_frame_errors: 30,
                max_frames: 2000,
            },
            decoder: DecoderConfig {
                early_stop,
                ..DecoderConfig::new(5)
            },
            seed: 17,
            workers,
            punctured: vec![],
        }
    }

    #[test]
    fn flooding_without_early_stop_sends_i_times_edges() {
        let code = ab();
        let res = run_campaign(&code, &[Scheduler::Flooding], &config(2, false)).unwrap();
        for r in &res.rows {
            assert_eq!(r.avg_messages, 5.0 * 75.0);
            assert_eq!(r.avg_messages_ci95, 0.0);
        }
    }

    #[test]
    fn row_invariants_and_worker_independence() {
        let code = ab();
        let a = run_campaign(&code, &[Scheduler::Random], &config(1, true)).unwrap();
        let b = run_campaign(&code, &[Scheduler::Random], &config(3, true)).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for r in &a.rows {
            assert_eq!(r.ber, r.bit_errors as f64 / (r.frames as f64 * 25.0));
            assert_eq!(r.fer, r.frame_errors as f64 / r.frames as f64);
            assert!(r.ber <= r.fer);
            assert!(r.frame_errors == 30 || r.frames == 2000);
        }
    }

    #[test]
    fn csv_round_trip() {
        let code = ab();
        let res = run_campaign(&code, &[Scheduler::Flooding], &config(1, true)).unwrap();
        let text = res.to_csv();
        let back = CampaignResult::from_csv(&text).unwrap();
        assert_eq!(back.to_csv(), text);
        assert!(CampaignResult::from_csv("junk").is_err());
    }

    #[test]
    fn simulate_frames_matches_campaign_prefix() {
        let code = ab();
        let cfg = config(2, true);
        let frames = simulate_frames(&code, &Scheduler::Flooding, &cfg, 0, 500).unwrap();
        let row = CampaignRow::from_outcomes(1.0, 25, &frames);
        let res = run_campaign(
            &code,
            &[Scheduler::Flooding],
            &CampaignConfig {
                stop: StopRule {
                    min_frame_errors: u64::MAX,
                    max_frames: 500,
                },
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(res.rows[0].to_owned().bit_errors, row.bit_errors);
        assert_eq!(res.rows[0].frames, 500);
    }

    #[test]
    fn rejects_bad_inputs() {
        let code = ab();
        let mut cfg = config(1, true);
        cfg.stop.max_frames = 0;
        assert!(run_campaign(&code, &[Scheduler::Flooding], &cfg).is_err());
        let cfg = config(1, true);
        assert!(run_campaign(&code, &[Scheduler::Flooding, Scheduler::Random], &cfg).is_err());
        let cfg = CampaignConfig {
            punctured: vec![25],
            ..config(1, true)
        };
        assert!(run_campaign(&code, &[Scheduler::Flooding], &cfg).is_err());
    }
}
