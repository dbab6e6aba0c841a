//! `reldec` command-line interface.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use reldec::campaign::{run_campaign, CampaignConfig, CampaignResult, StopRule};
use reldec::channel::{Dataset, DatasetSpec, Mixing, Sample, SnrGrid};
use reldec::code::{build_ab_code, load_alist, write_alist, ClusterMethod, LdpcCode, LiftSpec};
use reldec::decode::{Decoder, DecoderConfig, PolicyMode, Scheduler};
use reldec::mdp::Hyperparams;
use reldec::policy::{PolicyArtifact, Scheme, TableChoice};
use reldec::rng::{self, domain};
use reldec::train::{log_to_csv, Trainer};

const GLOBAL_STREAM: u64 = 0;
const LOCAL_STREAM: u64 = 1;
const ADAPT_STREAM: u64 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "reldec",
    version,
    about = "Learned cluster scheduling for LDPC belief-propagation decoding"
)]
struct Cli {
    /// key=value file whose entries fill in flags not given on the command line.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a code and write it as an alist file.
    BuildCode(BuildCodeArgs),
    /// Draw LLR datasets over an SNR grid.
    GenData(GenDataArgs),
    /// Train a scheduling policy.
    Train(TrainArgs),
    /// Adapt a trained global policy to one or all SNR tasks.
    Adapt(AdaptArgs),
    /// Decode the LLR vectors of a dataset file.
    Decode(DecodeArgs),
    /// Monte Carlo BER/FER campaign.
    Simulate(SimulateArgs),
    /// Average CN-to-VN message counts over a fixed number of frames.
    CountMessages(SimulateArgs),
    /// Merge campaign CSVs into one long-form table for plotting.
    ExportPlotCsv(ExportArgs),
}

#[derive(Args, Debug, Serialize, Clone)]
struct CodeArgs {
    /// Array-based code with column weight GAMMA and prime P.
    #[arg(long, num_args = 2, value_names = ["GAMMA", "P"])]
    ab: Option<Vec<usize>>,
    /// Lifting specification file.
    #[arg(long)]
    lift: Option<PathBuf>,
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: Option<PathBuf>,
    /// Check nodes per cluster.
    #[arg(long, default_value_t = 1)]
    z: usize,
    #[arg(long, default_value = "sequential", value_parser = parse_cluster)]
    cluster: ClusterMethod,
}

fn parse_cluster(s: &str) -> std::result::Result<ClusterMethod, String> {
    s.parse().map_err(|e: reldec::Error| e.to_string())
}

#[derive(Args, Debug, Serialize)]
struct BuildCodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MixingArg {
    Mixed,
    PerSnr,
}

#[derive(Args, Debug, Serialize)]
struct GenDataArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Comma-separated Eb/N0 grid in dB.
    #[arg(long, default_value = "1,1.5,2,2.5,3")]
    snr: String,
    #[arg(long)]
    per_snr: usize,
    #[arg(long, value_enum, default_value = "mixed")]
    mixing: MixingArg,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; per-SNR sets go to `<stem>-k<index>.<ext>`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize, Clone)]
struct HyperArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    #[arg(long, default_value_t = 0.6)]
    epsilon: f64,
    #[arg(long, default_value_t = 50)]
    ell_max: usize,
    #[arg(long, default_value_t = 1e-4)]
    loss_min: f64,
    #[arg(long, default_value_t = 10)]
    loss_stride: usize,
    #[arg(long, default_value_t = 50)]
    imax: usize,
}

impl HyperArgs {
    fn build(&self, tasks: usize) -> Hyperparams {
        Hyperparams {
            alpha: self.alpha,
            beta: self.beta,
            epsilon: self.epsilon,
            ell_max: self.ell_max,
            loss_min: self.loss_min,
            loss_stride: self.loss_stride,
            tasks,
            i_max: self.imax,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long, default_value = "1,1.5,2,2.5,3")]
    snr: String,
    /// Size of the mixed-SNR global set (split evenly over the grid).
    #[arg(long, default_value_t = 1000)]
    global_size: usize,
    /// Size of each per-SNR local set.
    #[arg(long, default_value_t = 1000)]
    local_size: usize,
    #[arg(long, default_value_t = 1)]
    meta_iters: usize,
    /// For am-reldec: hold back the last meta-iteration and adapt online on
    /// this many fresh vectors per SNR.
    #[arg(long)]
    adapt_size: Option<usize>,
    /// Train on an existing mixed dataset instead of drawing one (reldec only).
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    hp: HyperArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-episode loss trace CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    workers: usize,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: reldec::Error| e.to_string())
}

#[derive(Args, Debug, Serialize)]
struct AdaptArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long)]
    policy: PathBuf,
    /// Grid index to adapt; all tasks when omitted.
    #[arg(long)]
    task: Option<usize>,
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    workers: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum SchedulerArg {
    Flooding,
    Random,
    Policy,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Snapshot,
    Live,
}

#[derive(Args, Debug, Serialize, Clone)]
struct SchedArgs {
    #[arg(long, value_enum, default_value = "flooding")]
    scheduler: SchedulerArg,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "snapshot")]
    mode: ModeArg,
    /// `global`, `local` (table k at grid point k) or `local:K`.
    #[arg(long, default_value = "global")]
    table: String,
    #[arg(long, default_value_t = 50)]
    imax: usize,
    /// Run all `imax` iterations even after the syndrome is satisfied.
    #[arg(long)]
    no_early_stop: bool,
    /// Check the syndrome of the channel decisions before the first iteration.
    #[arg(long)]
    precheck: bool,
}

#[derive(Args, Debug, Serialize)]
struct DecodeArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    sched: SchedArgs,
    /// Dataset CSV produced by `gen-data`.
    #[arg(long)]
    llr: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    sched: SchedArgs,
    #[arg(long, default_value = "1,1.5,2,2.5,3")]
    snr: String,
    /// Frame cap per SNR.
    #[arg(long, default_value_t = 100_000)]
    frames: u64,
    /// Stop an SNR point after this many frame errors (default 100 for
    /// `simulate`, unlimited for `count-messages`).
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ExportArgs {
    /// `label=path` of a campaign CSV; repeatable.
    #[arg(long = "input", required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    code_fingerprint: Option<&'a str>,
    config: &'a T,
}

/// Writes `contents` to `path` via a temporary file and rename, so a
/// failed run never leaves a partial output behind.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_manifest<T: Serialize>(
    out: &Path,
    command: &str,
    fingerprint: Option<&str>,
    config: &T,
) -> Result<()> {
    let manifest = Manifest {
        tool: "reldec",
        version: env!("CARGO_PKG_VERSION"),
        command,
        code_fingerprint: fingerprint,
        config,
    };
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(Path::new(&path), &text)
}

struct LoadedCode {
    code: LdpcCode,
    id: String,
    punctured: Vec<usize>,
}

fn load_code(args: &CodeArgs) -> Result<LoadedCode> {
    let given = [args.ab.is_some(), args.lift.is_some(), args.alist.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        bail!("give exactly one of --ab, --lift, --alist");
    }
    if let Some(ab) = &args.ab {
        let h = build_ab_code(ab[0], ab[1])?;
        return Ok(LoadedCode {
            code: LdpcCode::new(h, args.z, args.cluster)?,
            id: format!("ab-{}-{}", ab[0], ab[1]),
            punctured: vec![],
        });
    }
    if let Some(path) = &args.lift {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec = LiftSpec::parse(&text)?;
        let h = spec.lift()?;
        let rate = spec.transmitted_rate(&h);
        return Ok(LoadedCode {
            code: LdpcCode::new(h, args.z, args.cluster)?.with_rate(rate),
            id: file_id(path),
            punctured: spec.punctured_vns(),
        });
    }
    let path = args.alist.as_ref().expect("checked above");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(LoadedCode {
        code: LdpcCode::new(load_alist(&text)?, args.z, args.cluster)?,
        id: file_id(path),
        punctured: vec![],
    })
}

fn file_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "code".into())
}

/// Rebuilds `loaded` with the clustering stored in `policy`.
fn with_policy_clusters(loaded: LoadedCode, policy: &PolicyArtifact) -> Result<LoadedCode> {
    let rate = loaded.code.rate();
    let code = LdpcCode::with_groups(
        loaded.code.matrix().clone(),
        policy.z,
        policy.clusters.clone(),
    )?
    .with_rate(rate);
    policy.check_compatible(&code)?;
    Ok(LoadedCode { code, ..loaded })
}

fn parse_grid(s: &str) -> Result<SnrGrid> {
    let values = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad SNR value '{v}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnrGrid::new(values)?)
}

fn dataset_spec<'a>(loaded: &'a LoadedCode, grid: &'a SnrGrid, seed: u64) -> DatasetSpec<'a> {
    DatasetSpec {
        code_id: &loaded.id,
        block_length: loaded.code.block_length(),
        rate: loaded.code.rate(),
        grid,
        seed,
    }
}

fn punctured_samples(mut samples: Vec<Sample>, punctured: &[usize]) -> Vec<Sample> {
    for s in &mut samples {
        for &p in punctured {
            s.llr.0[p] = 0.0;
        }
    }
    samples
}

fn per_snr_sets(
    loaded: &LoadedCode,
    grid: &SnrGrid,
    seed: u64,
    count: usize,
    stream: u64,
) -> Result<Vec<Vec<Sample>>> {
    Ok(dataset_spec(loaded, grid, seed)
        .generate(count, Mixing::PerSnr, stream)?
        .into_iter()
        .map(|d| punctured_samples(d.samples, &loaded.punctured))
        .collect())
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?)
}

fn cmd_build_code(args: &BuildCodeArgs) -> Result<()> {
    let loaded = load_code(&args.code)?;
    let h = loaded.code.matrix();
    write_atomic(&args.out, &write_alist(h))?;
    write_manifest(
        &args.out,
        "build-code",
        Some(loaded.code.fingerprint()),
        args,
    )?;
    println!(
        "{}: {}x{} rank {} rate {:.4} edges {} clusters {}",
        loaded.id,
        h.rows(),
        h.cols(),
        h.rank_gf2(),
        loaded.code.rate(),
        loaded.code.num_edges(),
        loaded.code.clustering().num_clusters()
    );
    Ok(())
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<()> {
    let loaded = load_code(&args.code)?;
    let grid = parse_grid(&args.snr)?;
    let mixing = match args.mixing {
        MixingArg::Mixed => Mixing::Mixed,
        MixingArg::PerSnr => Mixing::PerSnr,
    };
    let sets =
        dataset_spec(&loaded, &grid, args.seed).generate(args.per_snr, mixing, args.stream)?;
    let sets: Vec<Dataset> = sets
        .into_iter()
        .map(|d| Dataset {
            samples: punctured_samples(d.samples, &loaded.punctured),
            ..d
        })
        .collect();
    if sets.len() == 1 {
        write_atomic(&args.out, &sets[0].to_csv())?;
    } else {
        for (k, d) in sets.iter().enumerate() {
            write_atomic(&indexed_path(&args.out, k), &d.to_csv())?;
        }
    }
    write_manifest(&args.out, "gen-data", Some(loaded.code.fingerprint()), args)
}

fn indexed_path(out: &Path, k: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-k{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}-k{k}"),
    };
    out.with_file_name(name)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let loaded = load_code(&args.code)?;
    let grid = parse_grid(&args.snr)?;
    let k = grid.len();
    let hp = args.hp.build(k);
    let trainer = Trainer::new(&loaded.code, hp, args.seed)?;
    let global = match &args.data {
        Some(path) => {
            if args.scheme != Scheme::Reldec {
                bail!("--data is only supported with --scheme reldec");
            }
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Dataset::from_csv(&text)?.samples
        }
        None => {
            let per = args.global_size / k;
            if per == 0 {
                bail!(
                    "--global-size {} is smaller than the grid",
                    args.global_size
                );
            }
            let mixed = dataset_spec(&loaded, &grid, args.seed).generate(
                per,
                Mixing::Mixed,
                GLOBAL_STREAM,
            )?;
            punctured_samples(
                mixed.into_iter().next().expect("one mixed set").samples,
                &loaded.punctured,
            )
        }
    };
    let pool = thread_pool(args.workers)?;
    let output = pool.install(|| -> Result<_> {
        match args.scheme {
            Scheme::Reldec => Ok(trainer.train_reldec(&global)?),
            Scheme::MReldec => {
                let locals =
                    per_snr_sets(&loaded, &grid, args.seed, args.local_size, LOCAL_STREAM)?;
                Ok(trainer.train_m_reldec(&global, &locals)?)
            }
            Scheme::AmReldec => {
                let locals =
                    per_snr_sets(&loaded, &grid, args.seed, args.local_size, LOCAL_STREAM)?;
                let Some(adapt) = args.adapt_size else {
                    return Ok(trainer.train_am_reldec(&global, &locals, args.meta_iters)?);
                };
                if args.meta_iters < 2 {
                    bail!("--adapt-size needs --meta-iters of at least 2");
                }
                let mut out = trainer.train_am_reldec(&global, &locals, args.meta_iters - 1)?;
                let adapt_sets = if adapt == 0 {
                    vec![vec![]; k]
                } else {
                    per_snr_sets(&loaded, &grid, args.seed, adapt, ADAPT_STREAM)?
                };
                let adapted = adapt_all(&trainer, &out.policy, &adapt_sets)?;
                for (q, log) in adapted {
                    out.policy.local_q.push(q);
                    out.log.extend(log);
                }
                out.policy.provenance.meta_iterations = args.meta_iters;
                out.policy.provenance.adapt_examples = vec![adapt; k];
                Ok(out)
            }
        }
    })?;
    write_atomic(&args.out, &output.policy.to_json()?)?;
    if let Some(log) = &args.log {
        write_atomic(log, &log_to_csv(&output.log))?;
    }
    write_manifest(&args.out, "train", Some(loaded.code.fingerprint()), args)?;
    println!(
        "{} policy: {} episodes, {} table cells",
        args.scheme,
        output.log.len(),
        output.policy.global_q.num_cells()
    );
    Ok(())
}

type Adapted = (reldec::mdp::QTable, Vec<reldec::train::EpisodeRecord>);

fn adapt_all(
    trainer: &Trainer<'_>,
    policy: &PolicyArtifact,
    sets: &[Vec<Sample>],
) -> Result<Vec<Adapted>> {
    sets.par_iter()
        .enumerate()
        .map(|(k, set)| Ok(trainer.adapt_online(policy, set, k)?))
        .collect()
}

fn cmd_adapt(args: &AdaptArgs) -> Result<()> {
    let policy = PolicyArtifact::load(&args.policy)?;
    let loaded = with_policy_clusters(load_code(&args.code)?, &policy)?;
    let grid = SnrGrid::new(policy.provenance.snr_grid_db.clone())?;
    let k = grid.len();
    if let Some(t) = args.task {
        if t >= k {
            bail!("--task {t} outside a grid of {k} points");
        }
    }
    let hp = Hyperparams {
        tasks: k,
        ..policy.hyperparams.clone()
    };
    let trainer = Trainer::new(&loaded.code, hp, args.seed)?;
    let sets = if args.size == 0 {
        vec![vec![]; k]
    } else {
        per_snr_sets(&loaded, &grid, args.seed, args.size, ADAPT_STREAM)?
    };
    let sets: Vec<Vec<Sample>> = sets
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            if args.task.is_none_or(|t| t == i) {
                s
            } else {
                vec![]
            }
        })
        .collect();
    let adapted = thread_pool(args.workers)?.install(|| adapt_all(&trainer, &policy, &sets))?;
    let mut out = policy.clone();
    out.local_q.clear();
    let mut log = Vec::new();
    for (q, entries) in adapted {
        out.local_q.push(q);
        log.extend(entries);
    }
    out.provenance.adapt_examples = sets.iter().map(Vec::len).collect();
    write_atomic(&args.out, &out.to_json()?)?;
    if let Some(path) = &args.log {
        write_atomic(path, &log_to_csv(&log))?;
    }
    write_manifest(&args.out, "adapt", Some(loaded.code.fingerprint()), args)
}

/// Resolved scheduler inputs: the policy (if any) and the code rebuilt
/// with the policy's clustering.
struct SchedSetup {
    loaded: LoadedCode,
    policy: Option<PolicyArtifact>,
}

fn sched_setup(code: &CodeArgs, sched: &SchedArgs) -> Result<SchedSetup> {
    let loaded = load_code(code)?;
    match (sched.scheduler, &sched.policy) {
        (SchedulerArg::Policy, Some(path)) => {
            let policy = PolicyArtifact::load(path)?;
            Ok(SchedSetup {
                loaded: with_policy_clusters(loaded, &policy)?,
                policy: Some(policy),
            })
        }
        (SchedulerArg::Policy, None) => bail!("--scheduler policy needs --policy"),
        (_, Some(_)) => bail!("--policy is only used with --scheduler policy"),
        (_, None) => Ok(SchedSetup {
            loaded,
            policy: None,
        }),
    }
}

/// Table choice for grid point `k`.
fn table_choice(table: &str, k: usize) -> Result<TableChoice> {
    match table {
        "global" => Ok(TableChoice::Global),
        "local" => Ok(TableChoice::Local(k)),
        other => match other.strip_prefix("local:") {
            Some(i) => Ok(TableChoice::Local(i.parse().context("bad --table index")?)),
            None => bail!("--table must be global, local or local:K"),
        },
    }
}

fn schedulers<'a>(
    setup: &'a SchedSetup,
    sched: &SchedArgs,
    points: usize,
) -> Result<Vec<Scheduler<'a>>> {
    let mode = match sched.mode {
        ModeArg::Snapshot => PolicyMode::Snapshot,
        ModeArg::Live => PolicyMode::Live,
    };
    match (sched.scheduler, &setup.policy) {
        (SchedulerArg::Flooding, _) => Ok(vec![Scheduler::Flooding]),
        (SchedulerArg::Random, _) => Ok(vec![Scheduler::Random]),
        (SchedulerArg::Policy, Some(policy)) => (0..points)
            .map(|k| {
                Ok(Scheduler::from_policy(
                    policy,
                    &setup.loaded.code,
                    table_choice(&sched.table, k)?,
                    mode,
                )?)
            })
            .collect(),
        (SchedulerArg::Policy, None) => unreachable!("checked in sched_setup"),
    }
}

fn decoder_config(sched: &SchedArgs) -> DecoderConfig {
    DecoderConfig {
        i_max: sched.imax,
        syndrome_precheck: sched.precheck,
        early_stop: !sched.no_early_stop,
    }
}

fn cmd_decode(args: &DecodeArgs) -> Result<()> {
    let setup = sched_setup(&args.code, &args.sched)?;
    let code = &setup.loaded.code;
    let text =
        fs::read_to_string(&args.llr).with_context(|| format!("reading {}", args.llr.display()))?;
    let data = Dataset::from_csv(&text)?;
    let scheds = schedulers(&setup, &args.sched, data.grid.len())?;
    let mut decoder = Decoder::new(code, decoder_config(&args.sched))?;
    let mut out =
        String::from("index,snr_index,ebn0_db,converged,iterations,messages,bit_errors,bits\n");
    for (i, s) in data.samples.iter().enumerate() {
        let sched = &scheds[s.snr_index.min(scheds.len() - 1)];
        let mut r = rng::stream(args.seed, &[domain::DECODE, s.snr_index as u64, i as u64]);
        let res = decoder.decode(s.llr.as_slice(), sched, &mut r)?;
        let bits: String = res.bits.iter().map(|b| char::from(b'0' + b)).collect();
        let errors = res.bits.iter().filter(|&&b| b == 1).count();
        out.push_str(&format!(
            "{i},{},{},{},{},{},{errors},{bits}\n",
            s.snr_index, s.ebn0_db, res.converged, res.iterations_used, res.messages_sent
        ));
    }
    write_atomic(&args.out, &out)?;
    write_manifest(&args.out, "decode", Some(code.fingerprint()), args)
}

fn campaign(args: &SimulateArgs, default_min_errors: u64) -> Result<(CampaignResult, String)> {
    let setup = sched_setup(&args.code, &args.sched)?;
    let grid = parse_grid(&args.snr)?;
    let scheds = schedulers(&setup, &args.sched, grid.len())?;
    let cfg = CampaignConfig {
        grid,
        stop: StopRule {
            min_frame_errors: args.min_errors.unwrap_or(default_min_errors),
            max_frames: args.frames,
        },
        decoder: decoder_config(&args.sched),
        seed: args.seed,
        workers: args.workers,
        punctured: setup.loaded.punctured.clone(),
    };
    let result = run_campaign(&setup.loaded.code, &scheds, &cfg)?;
    Ok((result, setup.loaded.code.fingerprint().to_string()))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let (result, fp) = campaign(args, 100)?;
    write_atomic(&args.out, &result.to_csv())?;
    write_manifest(&args.out, "simulate", Some(&fp), args)?;
    for r in &result.rows {
        println!(
            "{} dB: frames {} ber {:.3e} fer {:.3e} avg_messages {:.1}",
            r.ebn0_db, r.frames, r.ber, r.fer, r.avg_messages
        );
    }
    Ok(())
}

fn cmd_count_messages(args: &SimulateArgs) -> Result<()> {
    let (result, fp) = campaign(args, u64::MAX)?;
    let mut out = String::from(
        "ebn0_db,frames,avg_messages,avg_messages_ci95,avg_messages_erroneous,avg_iterations\n",
    );
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.ebn0_db,
            r.frames,
            r.avg_messages,
            r.avg_messages_ci95,
            r.avg_messages_erroneous,
            r.avg_iterations
        ));
    }
    write_atomic(&args.out, &out)?;
    write_manifest(&args.out, "count-messages", Some(&fp), args)
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let mut out = String::from(
        "label,scheduler,ebn0_db,ber,ber_ci95,fer,fer_ci95,avg_messages,avg_messages_ci95\n",
    );
    for input in &args.inputs {
        let (label, path) = input
            .split_once('=')
            .with_context(|| format!("--input '{input}' is not label=path"))?;
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let result = CampaignResult::from_csv(&text)?;
        for r in &result.rows {
            out.push_str(&format!(
                "{label},{},{},{},{},{},{},{},{}\n",
                result.scheduler,
                r.ebn0_db,
                r.ber,
                r.ber_ci95,
                r.fer,
                r.fer_ci95,
                r.avg_messages,
                r.avg_messages_ci95
            ));
        }
    }
    write_atomic(&args.out, &out)?;
    write_manifest(&args.out, "export-plot-csv", None, args)
}

/// Appends `--key value` for every config entry whose flag is absent from `argv`.
fn merge_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv.get(pos + 1).context("--config needs a file")?.clone();
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let given: HashSet<String> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{path}:{}: expected key=value", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if given.contains(&key) {
            continue;
        }
        match value {
            "true" => argv.push(format!("--{key}")),
            "false" => {}
            _ => {
                argv.push(format!("--{key}"));
                argv.extend(value.split_whitespace().map(str::to_string));
            }
        }
    }
    Ok(argv)
}

fn run() -> Result<()> {
    let argv = merge_config(std::env::args().collect())?;
    let cli = Cli::parse_from(argv);
    match &cli.command {
        Command::BuildCode(a) => cmd_build_code(a),
        Command::GenData(a) => cmd_gen_data(a),
        Command::Train(a) => cmd_train(a),
        Command::Adapt(a) => cmd_adapt(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::CountMessages(a) => cmd_count_messages(a),
        Command::ExportPlotCsv(a) => cmd_export(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
