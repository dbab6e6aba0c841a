//! Frame decoding with flooding, random sequential or learned cluster
//! schedules.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bp::MessageState;
use crate::channel::LlrVector;
use crate::code::LdpcCode;
use crate::error::{Error, Result};
use crate::mdp::{cluster_value, greedy_action, schedule_order_into, QTable};
use crate::policy::{PolicyArtifact, TableChoice};

/// How a learned schedule reads cluster states within an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// Order fixed from the states at the start of the iteration.
    #[default]
    Snapshot,
    /// Each pick re-reads the remaining clusters' current states.
    Live,
}

impl std::str::FromStr for PolicyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snapshot" => Ok(Self::Snapshot),
            "live" => Ok(Self::Live),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Scheduler<'a> {
    /// All CNs then all VNs, once per iteration.
    Flooding,
    /// Every cluster once per iteration in a fresh uniform order.
    Random,
    /// Every cluster once per iteration in decreasing order of `Q((a, s_a), a)`.
    Policy { q: &'a QTable, mode: PolicyMode },
}

impl<'a> Scheduler<'a> {
    /// Policy scheduler after checking that `policy` belongs to `code`.
    pub fn from_policy(
        policy: &'a PolicyArtifact,
        code: &LdpcCode,
        choice: TableChoice,
        mode: PolicyMode,
    ) -> Result<Self> {
        policy.check_compatible(code)?;
        Ok(Scheduler::Policy {
            q: policy.table(choice)?,
            mode,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheduler::Flooding => "flooding",
            Scheduler::Random => "random",
            Scheduler::Policy {
                mode: PolicyMode::Snapshot,
                ..
            } => "policy-snapshot",
            Scheduler::Policy {
                mode: PolicyMode::Live,
                ..
            } => "policy-live",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub i_max: usize,
    /// Test the syndrome of the channel hard decisions before iterating.
    pub syndrome_precheck: bool,
    /// Stop as soon as the syndrome is zero after an iteration.
    pub early_stop: bool,
}

impl DecoderConfig {
    pub fn new(i_max: usize) -> Self {
        Self {
            i_max,
            syndrome_precheck: false,
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub iterations_used: usize,
    pub converged: bool,
    pub messages_sent: u64,
}

/// Reusable per-worker decoder: owns the message buffers for one code.
pub struct Decoder<'c> {
    code: &'c LdpcCode,
    config: DecoderConfig,
    msg: MessageState,
    order: Vec<usize>,
    states: Vec<u64>,
    bits: Vec<u8>,
    trace: Option<Vec<Vec<usize>>>,
}

impl<'c> Decoder<'c> {
    pub fn new(code: &'c LdpcCode, config: DecoderConfig) -> Result<Self> {
        if config.i_max == 0 {
            return Err(Error::InvalidArgument("i_max must be at least 1".into()));
        }
        let zeros = LlrVector(vec![0.0; code.block_length()]);
        Ok(Self {
            code,
            config,
            msg: MessageState::init(&zeros, code.graph())?,
            order: Vec::with_capacity(code.clustering().num_clusters()),
            states: vec![0; code.clustering().num_clusters()],
            bits: Vec::with_capacity(code.block_length()),
            trace: None,
        })
    }

    /// Records the cluster order of every sequential iteration from now on.
    pub fn record_orders(&mut self) {
        self.trace = Some(Vec::new());
    }

    /// Orders recorded since [`Decoder::record_orders`], cleared on read.
    pub fn take_orders(&mut self) -> Vec<Vec<usize>> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Decodes one frame. `rng` drives random orders and tie-breaking.
    pub fn decode<R: Rng + ?Sized>(
        &mut self,
        channel: &[f64],
        scheduler: &Scheduler<'_>,
        rng: &mut R,
    ) -> Result<DecodeResult> {
        let (iterations_used, converged) = self.run(channel, scheduler, rng)?;
        Ok(DecodeResult {
            bits: self.bits.clone(),
            iterations_used,
            converged,
            messages_sent: self.msg.messages_sent(),
        })
    }

    /// Like [`Decoder::decode`] but only reports bit errors against the
    /// all-zero word, avoiding the copy of the decision vector.
    pub fn decode_errors<R: Rng + ?Sized>(
        &mut self,
        channel: &[f64],
        scheduler: &Scheduler<'_>,
        rng: &mut R,
    ) -> Result<(u64, usize, bool, u64)> {
        let (iters, converged) = self.run(channel, scheduler, rng)?;
        let errors = self.bits.iter().filter(|&&b| b == 1).count() as u64;
        Ok((errors, iters, converged, self.msg.messages_sent()))
    }

    fn run<R: Rng + ?Sized>(
        &mut self,
        channel: &[f64],
        scheduler: &Scheduler<'_>,
        rng: &mut R,
    ) -> Result<(usize, bool)> {
        let code = self.code;
        let graph = code.graph();
        let cl = code.clustering();
        let h = code.matrix();
        if let Scheduler::Policy { q, .. } = scheduler {
            if q.num_actions() != cl.num_clusters() {
                return Err(Error::PolicyFormat(format!(
                    "table has {} actions for {} clusters",
                    q.num_actions(),
                    cl.num_clusters()
                )));
            }
        }
        self.msg.reset(channel, graph)?;
        let mut converged = self.msg.decide_into(h, &mut self.bits);
        if self.config.syndrome_precheck && converged {
            return Ok((0, true));
        }
        let mut iterations = 0;
        while iterations < self.config.i_max {
            iterations += 1;
            match scheduler {
                Scheduler::Flooding => self.msg.flood_all(graph),
                Scheduler::Random => {
                    self.order.clear();
                    self.order.extend(0..cl.num_clusters());
                    self.order.shuffle(rng);
                    self.sweep_order();
                }
                Scheduler::Policy {
                    q,
                    mode: PolicyMode::Snapshot,
                } => {
                    for a in 0..cl.num_clusters() {
                        self.states[a] = self.msg.cluster_state(cl, a);
                    }
                    schedule_order_into(q, &self.states, rng, &mut self.order);
                    self.sweep_order();
                }
                Scheduler::Policy {
                    q,
                    mode: PolicyMode::Live,
                } => self.sweep_live(q, rng),
            }
            converged = self.msg.decide_into(h, &mut self.bits);
            if converged && self.config.early_stop {
                break;
            }
        }
        Ok((iterations, converged))
    }

    /// Floods every cluster once in the order held in `self.order`.
    fn sweep_order(&mut self) {
        let graph = self.code.graph();
        let cl = self.code.clustering();
        for &a in &self.order {
            self.msg.flood_cluster_state(graph, cl, a);
        }
        self.record();
    }

    /// Floods every cluster once, each pick greedy among the clusters not
    /// yet scheduled using their current states.
    fn sweep_live<R: Rng + ?Sized>(&mut self, q: &QTable, rng: &mut R) {
        let graph = self.code.graph();
        let cl = self.code.clustering();
        let mut remaining: Vec<usize> = (0..cl.num_clusters()).collect();
        self.order.clear();
        while !remaining.is_empty() {
            let msg = &self.msg;
            let a = greedy_action(
                &remaining,
                |a| cluster_value(q, a, msg.cluster_state(cl, a)),
                rng,
            )
            .expect("remaining is non-empty");
            remaining.retain(|&r| r != a);
            self.order.push(a);
            self.msg.flood_cluster_state(graph, cl, a);
        }
        self.record();
    }

    fn record(&mut self) {
        if let Some(trace) = &mut self.trace {
            trace.push(self.order.clone());
        }
    }
}

/// One-shot convenience around [`Decoder`].
pub fn decode<R: Rng + ?Sized>(
    channel: &LlrVector,
    code: &LdpcCode,
    scheduler: &Scheduler<'_>,
    config: DecoderConfig,
    rng: &mut R,
) -> Result<DecodeResult> {
    Decoder::new(code, config)?.decode(channel.as_slice(), scheduler, rng)
}
