//! Sum-product message passing on a Tanner graph, one cluster at a time.

use crate::channel::LlrVector;
use crate::code::{Clustering, ParityCheckMatrix, TannerGraph};
use crate::error::{Error, Result};

/// Saturation bound for every message, in LLR units.
pub const M_CLIP: f64 = 30.0;

#[inline]
pub fn clip(x: f64) -> f64 {
    x.clamp(-M_CLIP, M_CLIP)
}

/// Check-node rule over the extrinsic incoming messages:
/// `2 atanh(prod tanh(m / 2))`, clipped.
pub fn cn_update(incoming: &[f64]) -> f64 {
    let prod: f64 = incoming.iter().map(|&m| (m / 2.0).tanh()).product();
    clip(2.0 * prod.atanh())
}

/// Variable-node rule: channel LLR plus the extrinsic incoming messages, clipped.
pub fn vn_update(channel_llr: f64, incoming_extrinsic: &[f64]) -> f64 {
    clip(
        incoming_extrinsic
            .iter()
            .fold(channel_llr, |acc, &m| acc + m),
    )
}

/// Hard decision: non-negative LLR decides 0.
#[inline]
pub fn hard_decision(posterior: f64) -> u8 {
    u8::from(posterior < 0.0)
}

pub fn syndrome_ok(bits: &[u8], h: &ParityCheckMatrix) -> bool {
    bits.len() == h.cols() && h.syndrome_ok(bits)
}

/// MSB-first binary-to-decimal conversion of a cluster's hard decisions.
pub fn state_index(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |s, &b| (s << 1) | u64::from(b & 1))
}

/// Hard-decision output of one cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterOutput {
    pub bits: Vec<u8>,
    pub state_index: u64,
}

impl ClusterOutput {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        let state_index = state_index(&bits);
        Self { bits, state_index }
    }
}

/// Edge-indexed messages, posteriors and the CN→VN message counter for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub c2v: Vec<f64>,
    pub v2c: Vec<f64>,
    pub posterior: Vec<f64>,
    pub channel: Vec<f64>,
    messages_sent: u64,
    scratch: Vec<f64>,
}

impl MessageState {
    /// `c2v = 0`, `v2c[c, v] = L_v`, posterior = channel.
    pub fn init(channel: &LlrVector, graph: &TannerGraph) -> Result<Self> {
        let mut state = Self {
            c2v: Vec::new(),
            v2c: Vec::new(),
            posterior: Vec::new(),
            channel: Vec::new(),
            messages_sent: 0,
            scratch: Vec::new(),
        };
        state.reset(channel.as_slice(), graph)?;
        Ok(state)
    }

    /// Re-initialises in place for a new frame, reusing the buffers.
    pub fn reset(&mut self, channel: &[f64], graph: &TannerGraph) -> Result<()> {
        if channel.len() != graph.num_vns() {
            return Err(Error::LengthMismatch {
                expected: graph.num_vns(),
                got: channel.len(),
            });
        }
        self.channel.clear();
        self.channel.extend_from_slice(channel);
        self.posterior.clear();
        self.posterior.extend_from_slice(channel);
        self.c2v.clear();
        self.c2v.resize(graph.num_edges(), 0.0);
        self.v2c.clear();
        self.v2c
            .extend((0..graph.num_edges()).map(|e| clip(channel[graph.edge_vn(e)])));
        self.messages_sent = 0;
        Ok(())
    }

    /// Total CN→VN messages sent since the last reset.
    pub fn messages_sent(&self) -> u64 {
        self.messages_sent
    }

    /// Sends all messages of check node `c`.
    fn update_cn(&mut self, graph: &TannerGraph, c: usize) {
        let edges = graph.cn_edges(c);
        let d = edges.len();
        let base = edges.start;
        // extrinsic products via prefix/suffix sweeps; scratch holds the prefixes
        self.scratch.clear();
        let mut acc = 1.0;
        for e in edges.clone() {
            self.scratch.push(acc);
            acc *= (self.v2c[e] / 2.0).tanh();
        }
        let mut suffix = 1.0;
        for i in (0..d).rev() {
            let e = base + i;
            self.c2v[e] = clip(2.0 * (self.scratch[i] * suffix).atanh());
            suffix *= (self.v2c[e] / 2.0).tanh();
        }
        self.messages_sent += d as u64;
    }

    /// Refreshes the posterior of `v` and all its outgoing messages.
    fn update_vn(&mut self, graph: &TannerGraph, v: usize) {
        let edges = graph.vn_edges(v);
        let l = self.channel[v];
        self.posterior[v] = edges.iter().fold(l, |acc, &e| acc + self.c2v[e]);
        for &e in edges {
            let sum = edges
                .iter()
                .filter(|&&o| o != e)
                .fold(l, |acc, &o| acc + self.c2v[o]);
            self.v2c[e] = clip(sum);
        }
    }

    /// One localized flooding step on cluster `a`, returning its new state index.
    pub fn flood_cluster_state(
        &mut self,
        graph: &TannerGraph,
        clustering: &Clustering,
        a: usize,
    ) -> u64 {
        for &c in clustering.cns(a) {
            self.update_cn(graph, c);
        }
        for &v in clustering.vns(a) {
            self.update_vn(graph, v);
        }
        self.cluster_state(clustering, a)
    }

    /// One localized flooding step on cluster `a` with its hard-decision output.
    pub fn flood_cluster(
        &mut self,
        graph: &TannerGraph,
        clustering: &Clustering,
        a: usize,
    ) -> ClusterOutput {
        self.flood_cluster_state(graph, clustering, a);
        self.cluster_output(clustering, a)
    }

    /// One classical flooding iteration: every CN, then every VN.
    pub fn flood_all(&mut self, graph: &TannerGraph) {
        for c in 0..graph.num_cns() {
            self.update_cn(graph, c);
        }
        for v in 0..graph.num_vns() {
            self.update_vn(graph, v);
        }
    }

    /// State index of cluster `a` from the current posteriors.
    pub fn cluster_state(&self, clustering: &Clustering, a: usize) -> u64 {
        clustering.vns(a).iter().fold(0u64, |s, &v| {
            (s << 1) | u64::from(hard_decision(self.posterior[v]))
        })
    }

    pub fn cluster_output(&self, clustering: &Clustering, a: usize) -> ClusterOutput {
        ClusterOutput::from_bits(
            clustering
                .vns(a)
                .iter()
                .map(|&v| hard_decision(self.posterior[v]))
                .collect(),
        )
    }

    pub fn hard_decisions(&self) -> Vec<u8> {
        self.posterior.iter().map(|&l| hard_decision(l)).collect()
    }

    /// Writes hard decisions into `out`, returning true if the syndrome is zero.
    pub fn decide_into(&self, h: &ParityCheckMatrix, out: &mut Vec<u8>) -> bool {
        out.clear();
        out.extend(self.posterior.iter().map(|&l| hard_decision(l)));
        h.syndrome_ok(out)
    }
}
