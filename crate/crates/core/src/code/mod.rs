//! Code construction, interchange and clustering.

mod ab;
mod alist;
mod cluster;
mod graph;
mod lift;
mod matrix;

pub use ab::build_ab_code;
pub use alist::{load_alist, write_alist};
pub use cluster::{
    intra_cluster_four_cycles, make_clusters, ClusterMethod, Clustering, MAX_CLUSTER_VNS,
};
pub use graph::TannerGraph;
pub use lift::{lift_code, BlockLift, LiftSpec};
pub use matrix::ParityCheckMatrix;

use crate::error::Result;

/// A parity-check matrix together with its Tanner graph and clustering:
/// everything a decoder or trainer needs about the code.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    h: ParityCheckMatrix,
    graph: TannerGraph,
    clustering: Clustering,
    fingerprint: String,
    rate: f64,
}

impl LdpcCode {
    pub fn new(h: ParityCheckMatrix, z: usize, method: ClusterMethod) -> Result<Self> {
        let graph = TannerGraph::new(&h);
        let clustering = make_clusters(&graph, z, method)?;
        Ok(Self::from_parts(h, graph, clustering))
    }

    /// Uses explicit CN groups, e.g. the clustering stored with a policy.
    pub fn with_groups(h: ParityCheckMatrix, z: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let graph = TannerGraph::new(&h);
        let clustering = Clustering::from_groups(&graph, z, groups)?;
        Ok(Self::from_parts(h, graph, clustering))
    }

    fn from_parts(h: ParityCheckMatrix, graph: TannerGraph, clustering: Clustering) -> Self {
        let fingerprint = h.fingerprint();
        let rate = h.rate();
        Self {
            h,
            graph,
            clustering,
            fingerprint,
            rate,
        }
    }

    /// Overrides the rate used for `E_b/N_0` bookkeeping (e.g. with puncturing).
    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn matrix(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn block_length(&self) -> usize {
        self.h.cols()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }
}
