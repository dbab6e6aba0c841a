//! Training procedures for cluster-scheduling policies.
//!
//! - [`Trainer::train_reldec`]: plain Q-learning over one mixed-SNR set.
//! - [`Trainer::train_am_reldec`]: alternating per-SNR (local) adaptation and
//!   global refinement for a number of meta-iterations.
//! - [`Trainer::adapt_online`]: fast adaptation of a global table to one SNR.
//! - [`Trainer::train_m_reldec`]: one global pass, then independent per-SNR
//!   adaptation from the same global snapshot.
//!
//! Each episode draws from its own random stream keyed by phase, meta
//! iteration, task and example index, so results do not depend on how many
//! threads run the independent local phases.

use rayon::prelude::*;
use serde::Serialize;

use crate::bp::MessageState;
use crate::channel::Sample;
use crate::code::LdpcCode;
use crate::error::{Error, Result};
use crate::mdp::{
    cluster_value, epsilon_greedy, q_update, reward_from_states, Hyperparams, MdpInstance, QTable,
    StateKey, TransitionBatch,
};
use crate::policy::{PolicyArtifact, Provenance, Scheme};
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Reldec,
    Local,
    Global,
    Adapt,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Reldec => 1,
            Phase::Local => 2,
            Phase::Global => 3,
            Phase::Adapt => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Reldec => "reldec",
            Phase::Local => "local",
            Phase::Global => "global",
            Phase::Adapt => "adapt",
        }
    }
}

/// One training-log row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub phase: Phase,
    pub meta_iteration: usize,
    /// SNR task for local/adapt phases.
    pub task: Option<usize>,
    /// Index of the example within the dataset it came from.
    pub dataset_index: usize,
    pub ebn0_db: f64,
    pub steps: usize,
    pub early_exit: bool,
    /// Mean squared TD error of this episode's mini-batch under the table
    /// at episode end.
    pub episode_loss: f64,
    /// Normalised batch loss (local/adapt: running `L_k`; global: `L` so far).
    pub batch_loss: f64,
}

/// Loss trace as CSV: `episode,phase,meta_iteration,task,dataset_index,ebn0_db,steps,early_exit,episode_loss,batch_loss`.
pub fn log_to_csv(log: &[EpisodeRecord]) -> String {
    let mut out = String::from(
        "episode,phase,meta_iteration,task,dataset_index,ebn0_db,steps,early_exit,episode_loss,batch_loss\n",
    );
    for (i, r) in log.iter().enumerate() {
        let task = r.task.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{i},{},{},{task},{},{},{},{},{},{}\n",
            r.phase.as_str(),
            r.meta_iteration,
            r.dataset_index,
            r.ebn0_db,
            r.steps,
            r.early_exit,
            r.episode_loss,
            r.batch_loss
        ));
    }
    out
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: PolicyArtifact,
    pub log: Vec<EpisodeRecord>,
}

struct Episode {
    steps: usize,
    early_exit: bool,
    minibatch: Vec<MdpInstance>,
}

/// Early-exit bookkeeping for adaptation phases: the running batch `B_k`
/// and the loss threshold.
struct AdaptGuard<'a> {
    batch: &'a TransitionBatch,
    loss_min: f64,
    stride: usize,
}

/// Drives the training procedures for one code.
pub struct Trainer<'a> {
    code: &'a LdpcCode,
    hp: Hyperparams,
    seed: u64,
    reference_states: Vec<u64>,
}

impl<'a> Trainer<'a> {
    /// Trainer that assumes the all-zero codeword was transmitted.
    pub fn new(code: &'a LdpcCode, hp: Hyperparams, seed: u64) -> Result<Self> {
        hp.validate()?;
        Ok(Self {
            code,
            hp,
            seed,
            reference_states: vec![0; code.clustering().num_clusters()],
        })
    }

    /// Uses `codeword` as the transmitted word when scoring cluster outputs.
    pub fn with_reference(mut self, codeword: &[u8]) -> Result<Self> {
        if codeword.len() != self.code.block_length() {
            return Err(Error::LengthMismatch {
                expected: self.code.block_length(),
                got: codeword.len(),
            });
        }
        if !self.code.matrix().syndrome_ok(codeword) {
            return Err(Error::InvalidArgument(
                "reference word is not a codeword".into(),
            ));
        }
        let cl = self.code.clustering();
        self.reference_states = (0..cl.num_clusters())
            .map(|a| {
                let bits: Vec<u8> = cl.vns(a).iter().map(|&v| codeword[v]).collect();
                crate::bp::state_index(&bits)
            })
            .collect();
        Ok(self)
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    fn check_samples(&self, samples: &[Sample]) -> Result<()> {
        let n = self.code.block_length();
        match samples.iter().find(|s| s.llr.len() != n) {
            Some(s) => Err(Error::LengthMismatch {
                expected: n,
                got: s.llr.len(),
            }),
            None => Ok(()),
        }
    }

    /// One learning episode on `sample`. Without a guard it runs exactly
    /// `ell_max` steps; with one it also stops once the normalised loss,
    /// refreshed every `stride` steps, drops to the threshold.
    fn run_episode(
        &self,
        q: &mut QTable,
        sample: &Sample,
        stream: &[u64],
        msg: &mut MessageState,
        guard: Option<AdaptGuard<'_>>,
    ) -> Result<Episode> {
        let cl = self.code.clustering();
        let graph = self.code.graph();
        let mut rng = rng::stream(self.seed, stream);
        msg.reset(sample.llr.as_slice(), graph)?;
        let actions: Vec<usize> = (0..cl.num_clusters()).collect();
        let mut states: Vec<u64> = actions.iter().map(|&a| msg.cluster_state(cl, a)).collect();
        let mut minibatch = Vec::with_capacity(self.hp.ell_max);
        let mut current = TransitionBatch::new();
        let mut loss = 1.0;
        let mut early_exit = false;
        while minibatch.len() < self.hp.ell_max {
            if let Some(g) = &guard {
                if loss <= g.loss_min {
                    early_exit = true;
                    break;
                }
            }
            let a = epsilon_greedy(
                &actions,
                |a| cluster_value(q, a, states[a]),
                self.hp.epsilon,
                &mut rng,
            )?;
            let s = StateKey::new(a, states[a]);
            let next = msg.flood_cluster_state(graph, cl, a);
            let r = reward_from_states(self.reference_states[a], next, cl.neighbor_count(a));
            let s_next = StateKey::new(a, next);
            q_update(q, s, a, r, s_next, &self.hp);
            states[a] = next;
            let inst = MdpInstance {
                s,
                action: a,
                reward: r,
                s_next,
            };
            minibatch.push(inst);
            if let Some(g) = &guard {
                current.push(&inst);
                if minibatch.len() % g.stride == 0 {
                    let total = g.batch.len() + current.len();
                    loss = (g.batch.loss_sum(q, self.hp.beta) + current.loss_sum(q, self.hp.beta))
                        / total as f64;
                }
            }
        }
        Ok(Episode {
            steps: minibatch.len(),
            early_exit,
            minibatch,
        })
    }

    /// Full-length episodes over `samples`, accumulating the global batch.
    fn global_phase(
        &self,
        q: &mut QTable,
        samples: &[(usize, &Sample)],
        phase: Phase,
        meta_iteration: usize,
        log: &mut Vec<EpisodeRecord>,
    ) -> Result<()> {
        let mut msg = MessageState::init(&samples_first_llr(self.code), self.code.graph())?;
        let mut batch = TransitionBatch::new();
        for &(idx, sample) in samples {
            let stream = [
                domain::TRAIN,
                phase.tag(),
                meta_iteration as u64,
                0,
                idx as u64,
            ];
            let ep = self.run_episode(q, sample, &stream, &mut msg, None)?;
            batch.extend(&ep.minibatch);
            let episode_loss = crate::mdp::td_loss(&ep.minibatch, q, self.hp.beta)?;
            log.push(EpisodeRecord {
                phase,
                meta_iteration,
                task: None,
                dataset_index: idx,
                ebn0_db: sample.ebn0_db,
                steps: ep.steps,
                early_exit: false,
                episode_loss,
                batch_loss: batch.loss(q, self.hp.beta)?,
            });
        }
        Ok(())
    }

    /// Adaptation episodes with early exit, starting from a copy of `init`.
    fn adapt_phase(
        &self,
        init: &QTable,
        samples: &[(usize, &Sample)],
        phase: Phase,
        meta_iteration: usize,
        task: usize,
    ) -> Result<(QTable, Vec<EpisodeRecord>)> {
        let mut q = init.clone();
        let mut log = Vec::with_capacity(samples.len());
        let mut batch = TransitionBatch::new();
        let mut msg = MessageState::init(&samples_first_llr(self.code), self.code.graph())?;
        for &(idx, sample) in samples {
            let stream = [
                domain::TRAIN,
                phase.tag(),
                meta_iteration as u64,
                task as u64 + 1,
                idx as u64,
            ];
            let guard = AdaptGuard {
                batch: &batch,
                loss_min: self.hp.loss_min,
                stride: self.hp.loss_stride,
            };
            let ep = self.run_episode(&mut q, sample, &stream, &mut msg, Some(guard))?;
            batch.extend(&ep.minibatch);
            let episode_loss = if ep.minibatch.is_empty() {
                0.0
            } else {
                crate::mdp::td_loss(&ep.minibatch, &q, self.hp.beta)?
            };
            log.push(EpisodeRecord {
                phase,
                meta_iteration,
                task: Some(task),
                dataset_index: idx,
                ebn0_db: sample.ebn0_db,
                steps: ep.steps,
                early_exit: ep.early_exit,
                episode_loss,
                batch_loss: if batch.is_empty() {
                    0.0
                } else {
                    batch.loss(&q, self.hp.beta)?
                },
            });
        }
        Ok((q, log))
    }

    /// Plain Q-learning: one full-length episode per example, one table
    /// carried across all episodes.
    pub fn train_reldec(&self, dataset: &[Sample]) -> Result<TrainOutput> {
        self.check_samples(dataset)?;
        let mut q = QTable::new(self.code.clustering().num_clusters());
        let mut log = Vec::with_capacity(dataset.len());
        let indexed: Vec<(usize, &Sample)> = dataset.iter().enumerate().collect();
        self.global_phase(&mut q, &indexed, Phase::Reldec, 0, &mut log)?;
        let policy = self.artifact(
            Scheme::Reldec,
            q,
            vec![],
            Provenance {
                seed: self.seed,
                snr_grid_db: grid_of(dataset),
                meta_iterations: 0,
                global_examples: dataset.len(),
                local_examples: vec![],
                adapt_examples: vec![],
            },
        );
        Ok(TrainOutput { policy, log })
    }

    /// Agile meta-training. Each dataset is split into `meta_iterations`
    /// consecutive chunks; meta-iteration `i` adapts one local table per SNR
    /// from the current global table on chunk `i` of that SNR's set, resets
    /// the global table to the mean of the locals, and refines it with
    /// full-length episodes on chunk `i` of the global set.
    pub fn train_am_reldec(
        &self,
        global: &[Sample],
        locals: &[Vec<Sample>],
        meta_iterations: usize,
    ) -> Result<TrainOutput> {
        self.check_meta_inputs(global, locals)?;
        if meta_iterations == 0 {
            return Err(Error::InvalidArgument(
                "meta_iterations must be at least 1".into(),
            ));
        }
        let mut q = QTable::new(self.code.clustering().num_clusters());
        let mut log = Vec::new();
        for it in 0..meta_iterations {
            let results: Vec<Result<(QTable, Vec<EpisodeRecord>)>> = locals
                .par_iter()
                .enumerate()
                .map(|(k, set)| {
                    let chunk: Vec<(usize, &Sample)> = chunk(set, it, meta_iterations);
                    self.adapt_phase(&q, &chunk, Phase::Local, it, k)
                })
                .collect();
            let mut tables = Vec::with_capacity(locals.len());
            for r in results {
                let (table, entries) = r?;
                tables.push(table);
                log.extend(entries);
            }
            q = QTable::average(&tables)?;
            let chunk = chunk(global, it, meta_iterations);
            self.global_phase(&mut q, &chunk, Phase::Global, it, &mut log)?;
        }
        let policy = self.artifact(
            Scheme::AmReldec,
            q,
            vec![],
            Provenance {
                seed: self.seed,
                snr_grid_db: grid_of(global),
                meta_iterations,
                global_examples: global.len(),
                local_examples: locals.iter().map(Vec::len).collect(),
                adapt_examples: vec![],
            },
        );
        Ok(TrainOutput { policy, log })
    }

    /// Online adaptation of a trained global table to SNR task `task`.
    pub fn adapt_online(
        &self,
        policy: &PolicyArtifact,
        samples: &[Sample],
        task: usize,
    ) -> Result<(QTable, Vec<EpisodeRecord>)> {
        policy.check_compatible(self.code)?;
        self.adapt_from(&policy.global_q, samples, task)
    }

    /// Adaptation from an explicit starting table (shared by M-RELDEC and
    /// online adaptation).
    pub fn adapt_from(
        &self,
        init: &QTable,
        samples: &[Sample],
        task: usize,
    ) -> Result<(QTable, Vec<EpisodeRecord>)> {
        self.check_samples(samples)?;
        let indexed: Vec<(usize, &Sample)> = samples.iter().enumerate().collect();
        self.adapt_phase(init, &indexed, Phase::Adapt, 0, task)
    }

    /// Meta-training with a single global pass followed by independent
    /// per-SNR adaptation, each starting from the stored global table.
    pub fn train_m_reldec(&self, global: &[Sample], locals: &[Vec<Sample>]) -> Result<TrainOutput> {
        self.check_meta_inputs(global, locals)?;
        let mut q = QTable::new(self.code.clustering().num_clusters());
        let mut log = Vec::new();
        let indexed: Vec<(usize, &Sample)> = global.iter().enumerate().collect();
        self.global_phase(&mut q, &indexed, Phase::Global, 0, &mut log)?;
        let snapshot = q;
        let results: Vec<Result<(QTable, Vec<EpisodeRecord>)>> = locals
            .par_iter()
            .enumerate()
            .map(|(k, set)| self.adapt_from(&snapshot, set, k))
            .collect();
        let mut local_tables = Vec::with_capacity(locals.len());
        for r in results {
            let (table, entries) = r?;
            local_tables.push(table);
            log.extend(entries);
        }
        let policy = self.artifact(
            Scheme::MReldec,
            snapshot,
            local_tables,
            Provenance {
                seed: self.seed,
                snr_grid_db: grid_of(global),
                meta_iterations: 1,
                global_examples: global.len(),
                local_examples: locals.iter().map(Vec::len).collect(),
                adapt_examples: vec![],
            },
        );
        Ok(TrainOutput { policy, log })
    }

    fn check_meta_inputs(&self, global: &[Sample], locals: &[Vec<Sample>]) -> Result<()> {
        if locals.len() != self.hp.tasks {
            return Err(Error::InvalidArgument(format!(
                "{} local datasets for {} tasks",
                locals.len(),
                self.hp.tasks
            )));
        }
        if let Some(k) = locals.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "local dataset {k} is empty"
            )));
        }
        self.check_samples(global)?;
        for set in locals {
            self.check_samples(set)?;
        }
        // every local set must hold a single SNR, distinct across tasks
        let mut snrs = Vec::with_capacity(locals.len());
        for (k, set) in locals.iter().enumerate() {
            let db = set[0].ebn0_db;
            if set.iter().any(|s| s.ebn0_db != db) {
                return Err(Error::InvalidArgument(format!(
                    "local dataset {k} mixes SNRs"
                )));
            }
            if snrs.contains(&db) {
                return Err(Error::InvalidArgument(format!(
                    "SNR {db} dB used by two tasks"
                )));
            }
            snrs.push(db);
        }
        Ok(())
    }

    fn artifact(
        &self,
        scheme: Scheme,
        global_q: QTable,
        local_q: Vec<QTable>,
        provenance: Provenance,
    ) -> PolicyArtifact {
        PolicyArtifact::new(
            self.code,
            scheme,
            self.hp.clone(),
            provenance,
            global_q,
            local_q,
        )
    }
}

fn samples_first_llr(code: &LdpcCode) -> crate::channel::LlrVector {
    crate::channel::LlrVector(vec![0.0; code.block_length()])
}

/// Chunk `i` of `m` consecutive, near-equal chunks of `set`, with original indices.
fn chunk(set: &[Sample], i: usize, m: usize) -> Vec<(usize, &Sample)> {
    let lo = i * set.len() / m;
    let hi = (i + 1) * set.len() / m;
    (lo..hi).map(|j| (j, &set[j])).collect()
}

fn grid_of(samples: &[Sample]) -> Vec<f64> {
    let mut v: Vec<f64> = samples.iter().map(|s| s.ebn0_db).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{DatasetSpec, LlrVector, Mixing, SnrGrid};
    use crate::code::{build_ab_code, ClusterMethod};

    fn ab_code() -> LdpcCode {
        LdpcCode::new(build_ab_code(3, 5).unwrap(), 1, ClusterMethod::Sequential).unwrap()
    }

    fn noiseless(n: usize, count: usize) -> Vec<Sample> {
        (0..count)
            .map(|_| Sample {
                snr_index: 0,
                ebn0_db: 10.0,
                llr: LlrVector(vec![20.0; n]),
            })
            .collect()
    }

    fn mixed(code: &LdpcCode, per_snr: usize, seed: u64) -> Vec<Sample> {
        let grid = SnrGrid::new(vec![1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        let spec = DatasetSpec {
            code_id: "ab-3-5",
            block_length: code.block_length(),
            rate: code.rate(),
            grid: &grid,
            seed,
        };
        spec.generate(per_snr, Mixing::Mixed, 0)
            .unwrap()
            .remove(0)
            .samples
    }

    fn per_snr(code: &LdpcCode, per_snr: usize, seed: u64, stream: u64) -> Vec<Vec<Sample>> {
        let grid = SnrGrid::new(vec![1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        let spec = DatasetSpec {
            code_id: "ab-3-5",
            block_length: code.block_length(),
            rate: code.rate(),
            grid: &grid,
            seed,
        };
        spec.generate(per_snr, Mixing::PerSnr, stream)
            .unwrap()
            .into_iter()
            .map(|d| d.samples)
            .collect()
    }

    #[test]
    fn empty_dataset_gives_zero_table() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 1).unwrap();
        let out = t.train_reldec(&[]).unwrap();
        assert_eq!(out.policy.global_q, QTable::new(15));
        assert!(out.log.is_empty());
    }

    #[test]
    fn noiseless_episode_rewards_are_one() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 1).unwrap();
        let out = t.train_reldec(&noiseless(25, 1)).unwrap();
        assert_eq!(out.log[0].steps, 50);
        let q = &out.policy.global_q;
        assert!(q.num_cells() > 0);
        assert!(q.values().all(|v| v > 0.0));
        // every transition stays in state 0 with reward 1
        for (k, a, _) in q.sorted_cells() {
            assert_eq!(k.state, 0);
            assert_eq!(k.cluster as usize, a as usize);
        }
    }

    #[test]
    fn reldec_is_deterministic_and_bounded() {
        let code = ab_code();
        let data = mixed(&code, 40, 11);
        let hp = Hyperparams::default();
        let a = Trainer::new(&code, hp.clone(), 5)
            .unwrap()
            .train_reldec(&data)
            .unwrap();
        let b = Trainer::new(&code, hp.clone(), 5)
            .unwrap()
            .train_reldec(&data)
            .unwrap();
        assert_eq!(a.policy.to_json().unwrap(), b.policy.to_json().unwrap());
        assert_eq!(a.log, b.log);
        let bound = 1.0 / (1.0 - hp.beta);
        assert!(a
            .policy
            .global_q
            .values()
            .all(|v| (0.0..=bound).contains(&v)));
        assert!(a.log.iter().all(|r| r.steps == hp.ell_max));
        let c = Trainer::new(&code, hp, 6)
            .unwrap()
            .train_reldec(&data)
            .unwrap();
        assert_ne!(
            a.policy.global_q.fingerprint(),
            c.policy.global_q.fingerprint()
        );
    }

    #[test]
    fn rejects_wrong_block_length() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 1).unwrap();
        assert!(t.train_reldec(&noiseless(24, 1)).is_err());
    }

    #[test]
    fn am_reldec_structural_collapse() {
        let code = ab_code();
        let hp = Hyperparams {
            tasks: 1,
            loss_min: 0.0,
            ..Hyperparams::default()
        };
        let t = Trainer::new(&code, hp, 3).unwrap();
        let local = per_snr(&code, 6, 2, 1).remove(0);
        let global = mixed(&code, 2, 4);
        let out = t
            .train_am_reldec(&global, std::slice::from_ref(&local), 1)
            .unwrap();
        let locals: Vec<_> = out.log.iter().filter(|r| r.phase == Phase::Local).collect();
        let globals: Vec<_> = out
            .log
            .iter()
            .filter(|r| r.phase == Phase::Global)
            .collect();
        assert_eq!(locals.len(), local.len());
        assert_eq!(globals.len(), global.len());
        assert!(locals.iter().all(|r| r.steps == 50 && !r.early_exit));
        assert!(globals.iter().all(|r| r.steps == 50));
    }

    #[test]
    fn am_reldec_early_exit_once_converged() {
        let code = ab_code();
        let hp = Hyperparams {
            tasks: 1,
            ..Hyperparams::default()
        };
        let t = Trainer::new(&code, hp, 3).unwrap();
        let local = noiseless(25, 400);
        let global = noiseless(25, 2);
        let out = t.train_am_reldec(&global, &[local], 1).unwrap();
        let exits: Vec<_> = out.log.iter().filter(|r| r.early_exit).collect();
        assert!(!exits.is_empty());
        assert!(exits
            .iter()
            .all(|r| r.phase == Phase::Local && r.steps < 50 && r.steps % 10 == 0));
        assert!(exits.iter().all(|r| r.batch_loss <= 1e-4 + 1e-12));
        assert!(out.log.iter().all(|r| r.steps <= 50));
    }

    #[test]
    fn am_reldec_validates_inputs() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 3).unwrap();
        let locals = per_snr(&code, 2, 2, 1);
        let global = mixed(&code, 1, 4);
        assert!(t.train_am_reldec(&global, &locals[..4], 1).is_err());
        let mut with_empty = locals.clone();
        with_empty[2].clear();
        assert!(t.train_am_reldec(&global, &with_empty, 1).is_err());
        let mut dup = locals.clone();
        dup[1] = dup[0].clone();
        assert!(t.train_am_reldec(&global, &dup, 1).is_err());
        assert!(t.train_am_reldec(&global, &locals, 0).is_err());
        assert!(t.train_am_reldec(&global, &locals, 2).is_ok());
    }

    #[test]
    fn adapt_online_with_no_data_returns_global() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 3).unwrap();
        let trained = t.train_reldec(&mixed(&code, 10, 1)).unwrap().policy;
        let (local, log) = t.adapt_online(&trained, &[], 2).unwrap();
        assert_eq!(local, trained.global_q);
        assert!(log.is_empty());

        let other =
            LdpcCode::new(build_ab_code(3, 7).unwrap(), 1, ClusterMethod::Sequential).unwrap();
        let t7 = Trainer::new(&other, Hyperparams::default(), 3).unwrap();
        assert!(matches!(
            t7.adapt_online(&trained, &[], 0),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn larger_adaptation_sets_touch_more_cells() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 3).unwrap();
        let trained = t.train_reldec(&mixed(&code, 10, 1)).unwrap().policy;
        let set = per_snr(&code, 75, 9, 2).remove(2);
        let (q7, _) = t.adapt_online(&trained, &set[..7], 2).unwrap();
        let (q75, _) = t.adapt_online(&trained, &set, 2).unwrap();
        let changed = |q: &QTable| {
            q.sorted_cells()
                .iter()
                .filter(|&&(k, a, v)| trained.global_q.get(k, a as usize) != v)
                .count()
        };
        assert!(changed(&q75) >= changed(&q7));
        assert!(changed(&q7) > 0);
    }

    #[test]
    fn m_reldec_locals_share_global_snapshot() {
        let code = ab_code();
        let t = Trainer::new(&code, Hyperparams::default(), 3).unwrap();
        let global = mixed(&code, 4, 1);
        let locals = per_snr(&code, 5, 2, 1);
        let out = t.train_m_reldec(&global, &locals).unwrap();
        assert_eq!(out.policy.local_q.len(), 5);
        // each local equals an independent adaptation from the same stored table
        for (k, set) in locals.iter().enumerate() {
            let (expect, _) = t.adapt_from(&out.policy.global_q, set, k).unwrap();
            assert_eq!(out.policy.local_q[k], expect);
        }
        let again = t.train_m_reldec(&global, &locals).unwrap();
        assert_eq!(
            again.policy.to_json().unwrap(),
            out.policy.to_json().unwrap()
        );
    }

    #[test]
    fn m_reldec_single_empty_task_keeps_global() {
        let code = ab_code();
        let hp = Hyperparams {
            tasks: 1,
            ..Hyperparams::default()
        };
        let t = Trainer::new(&code, hp, 3).unwrap();
        let global = mixed(&code, 2, 1);
        // an empty local set is rejected up front; adapting on nothing is the identity
        assert!(t.train_m_reldec(&global, &[vec![]]).is_err());
        let g = t.train_reldec(&global).unwrap().policy.global_q;
        assert_eq!(t.adapt_from(&g, &[], 0).unwrap().0, g);
    }

    #[test]
    fn reference_codeword_symmetry() {
        // a nonzero codeword with LLR signs flipped accordingly gives rewards of 1
        let code = ab_code();
        let h = code.matrix();
        // brute-force a nonzero codeword supported on the first ten positions
        let mut word = vec![0u8; 25];
        'search: for mask in 1u32..(1 << 10) {
            for (i, w) in word.iter_mut().enumerate().take(10) {
                *w = ((mask >> i) & 1) as u8;
            }
            if h.syndrome_ok(&word) {
                break 'search;
            }
        }
        assert!(h.syndrome_ok(&word) && word.contains(&1));
        let llr: Vec<f64> = word
            .iter()
            .map(|&b| if b == 1 { -20.0 } else { 20.0 })
            .collect();
        let sample = Sample {
            snr_index: 0,
            ebn0_db: 10.0,
            llr: LlrVector(llr),
        };
        let t = Trainer::new(&code, Hyperparams::default(), 1)
            .unwrap()
            .with_reference(&word)
            .unwrap();
        let out = t.train_reldec(&[sample]).unwrap();
        assert!(out.log[0].episode_loss < 1.0);
        assert!(out
            .policy
            .global_q
            .values()
            .all(|v| (v - 0.1).abs() < 1e-12 || v > 0.1));
        assert!(t.with_reference(&[1; 25]).is_err());
    }
}
