//! The cluster-scheduling MDP: states, rewards, Q-learning updates,
//! exploration and the greedy scheduling policies.

mod qtable;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use qtable::{QTable, StateKey};

use crate::error::{Error, Result};

/// Learning and decoding hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Learning rate.
    pub alpha: f64,
    /// Reward discount.
    pub beta: f64,
    /// Exploration probability.
    pub epsilon: f64,
    /// Maximum learning steps per episode.
    pub ell_max: usize,
    /// Adaptation loss threshold.
    pub loss_min: f64,
    /// Steps between loss recomputations during adaptation.
    pub loss_stride: usize,
    /// Number of SNR tasks.
    pub tasks: usize,
    /// Maximum decoder iterations.
    pub i_max: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.9,
            epsilon: 0.6,
            ell_max: 50,
            loss_min: 1e-4,
            loss_stride: 10,
            tasks: 5,
            i_max: 50,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta {} outside [0, 1]", self.beta));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.ell_max == 0 {
            return bad("ell_max must be at least 1".into());
        }
        if self.loss_stride == 0 || self.loss_stride > self.ell_max {
            return bad(format!(
                "loss stride {} outside [1, ell_max = {}]",
                self.loss_stride, self.ell_max
            ));
        }
        if self.loss_min.is_nan() || self.loss_min < 0.0 {
            return bad(format!("loss_min {} must be non-negative", self.loss_min));
        }
        if self.tasks == 0 || self.i_max == 0 {
            return bad("tasks and i_max must be positive".into());
        }
        Ok(())
    }
}

/// One observed transition `(s, a, R, s')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpInstance {
    pub s: StateKey,
    pub action: usize,
    pub reward: f64,
    pub s_next: StateKey,
}

/// Fraction of cluster bits reconstructed correctly.
pub fn reward(transmitted: &[u8], reconstructed: &[u8]) -> Result<f64> {
    if transmitted.len() != reconstructed.len() {
        return Err(Error::LengthMismatch {
            expected: transmitted.len(),
            got: reconstructed.len(),
        });
    }
    if transmitted.is_empty() {
        return Err(Error::InvalidArgument("empty cluster".into()));
    }
    let hits = transmitted
        .iter()
        .zip(reconstructed)
        .filter(|(a, b)| (*a & 1) == (*b & 1))
        .count();
    Ok(hits as f64 / transmitted.len() as f64)
}

/// Same reward computed from packed state indices of an `l`-bit cluster.
#[inline]
pub fn reward_from_states(reference: u64, state: u64, l: usize) -> f64 {
    let errors = (reference ^ state).count_ones() as usize;
    (l - errors) as f64 / l as f64
}

/// Q-learning target `R + β max_a' Q(s', a')`.
#[inline]
pub fn td_target(q: &QTable, reward: f64, s_next: StateKey, beta: f64) -> f64 {
    reward + beta * q.row_max(s_next)
}

/// `Q(s,a) <- (1-α) Q(s,a) + α (R + β max_a' Q(s',a'))`; returns the new value.
pub fn q_update(
    q: &mut QTable,
    s: StateKey,
    action: usize,
    reward: f64,
    s_next: StateKey,
    hp: &Hyperparams,
) -> f64 {
    let target = td_target(q, reward, s_next, hp.beta);
    let new = (1.0 - hp.alpha) * q.get(s, action) + hp.alpha * target;
    q.set(s, action, new);
    new
}

/// Argmax of `value` over `actions`, ties broken uniformly at random.
pub fn greedy_action<R: Rng + ?Sized>(
    actions: &[usize],
    value: impl Fn(usize) -> f64,
    rng: &mut R,
) -> Result<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut pick = None;
    let mut ties = 0u32;
    for &a in actions {
        let v = value(a);
        if v > best {
            best = v;
            pick = Some(a);
            ties = 1;
        } else if v == best {
            // reservoir sampling over the maximisers
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                pick = Some(a);
            }
        }
    }
    pick.ok_or_else(|| Error::InvalidArgument("empty action set".into()))
}

/// With probability ε a uniform action, otherwise the greedy one.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    actions: &[usize],
    value: impl Fn(usize) -> f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if actions.is_empty() {
        return Err(Error::InvalidArgument("empty action set".into()));
    }
    if rng.random::<f64>() < epsilon {
        Ok(actions[rng.random_range(0..actions.len())])
    } else {
        greedy_action(actions, value, rng)
    }
}

/// ε-greedy choice over row `s` of `q`, restricted to `actions`.
pub fn select_epsilon_greedy<R: Rng + ?Sized>(
    q: &QTable,
    s: StateKey,
    actions: &[usize],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    epsilon_greedy(actions, |a| q.get(s, a), epsilon, rng)
}

/// `argmax_a Q(s, a)` with uniform tie-breaking.
pub fn greedy_policy<R: Rng + ?Sized>(q: &QTable, s: StateKey, rng: &mut R) -> usize {
    let actions: Vec<usize> = (0..q.num_actions()).collect();
    greedy_action(&actions, |a| q.get(s, a), rng).expect("table has at least one action")
}

/// Value of scheduling cluster `a` while it is in state `state`: `Q((a, s_a), a)`.
#[inline]
pub fn cluster_value(q: &QTable, a: usize, state: u64) -> f64 {
    q.get(StateKey::new(a, state), a)
}

/// Scheduling order for one decoder iteration from iteration-start states:
/// repeated argmax of `Q((a, s_a), a)` over the clusters not yet scheduled,
/// ties uniform.
pub fn schedule_order<R: Rng + ?Sized>(
    q: &QTable,
    cluster_states: &[u64],
    rng: &mut R,
) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cluster_states.len()).collect();
    schedule_order_into(q, cluster_states, rng, &mut order);
    order
}

/// Allocation-free form of [`schedule_order`]; `order` is overwritten.
pub fn schedule_order_into<R: Rng + ?Sized>(
    q: &QTable,
    cluster_states: &[u64],
    rng: &mut R,
    order: &mut Vec<usize>,
) {
    order.clear();
    order.extend(0..cluster_states.len());
    // a random pre-shuffle followed by a stable sort orders each tie group
    // uniformly, which matches repeated argmax with uniform tie-breaking
    order.shuffle(rng);
    order.sort_by(|&a, &b| {
        cluster_value(q, b, cluster_states[b]).total_cmp(&cluster_value(q, a, cluster_states[a]))
    });
}

/// Mean squared TD error of `batch` under the current table.
pub fn td_loss(batch: &[MdpInstance], q: &QTable, beta: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let sum: f64 = batch
        .iter()
        .map(|t| {
            let err = td_target(q, t.reward, t.s_next, beta) - q.get(t.s, t.action);
            err * err
        })
        .sum();
    Ok(sum / batch.len() as f64)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    reward_sum: f64,
    reward_sq_sum: f64,
}

/// A batch of transitions stored as per-`(s, a, s')` reward moments, so
/// that the TD loss under the current table costs one pass over distinct
/// transitions rather than over every instance.
#[derive(Debug, Clone, Default)]
pub struct TransitionBatch {
    groups: HashMap<(StateKey, u32, StateKey), Moments>,
    len: u64,
}

impl TransitionBatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: &MdpInstance) {
        let m = self
            .groups
            .entry((t.s, t.action as u32, t.s_next))
            .or_default();
        m.count += 1;
        m.reward_sum += t.reward;
        m.reward_sq_sum += t.reward * t.reward;
        self.len += 1;
    }

    pub fn extend<'a>(&mut self, ts: impl IntoIterator<Item = &'a MdpInstance>) {
        for t in ts {
            self.push(t);
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum of squared TD errors under `q`.
    pub fn loss_sum(&self, q: &QTable, beta: f64) -> f64 {
        let mut groups: Vec<_> = self.groups.iter().collect();
        // fixed summation order keeps results reproducible
        groups.sort_unstable_by(|a, b| a.0.cmp(b.0));
        groups
            .into_iter()
            .map(|(&(s, a, s_next), m)| {
                // sum_i (r_i + d)^2 with d = β max Q(s') - Q(s, a)
                let d = beta * q.row_max(s_next) - q.get(s, a as usize);
                (m.reward_sq_sum + 2.0 * d * m.reward_sum + m.count as f64 * d * d).max(0.0)
            })
            .sum()
    }

    /// Mean squared TD error under `q`.
    pub fn loss(&self, q: &QTable, beta: f64) -> Result<f64> {
        if self.len == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        Ok(self.loss_sum(q, beta) / self.len as f64)
    }
}
