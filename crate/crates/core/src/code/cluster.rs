//! Partition of check nodes into scheduling clusters.

use std::collections::HashMap;

use super::TannerGraph;
use crate::error::{Error, Result};

/// Largest cluster neighbourhood whose hard-decision pattern fits a state index.
pub const MAX_CLUSTER_VNS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    /// CNs `{a z, ..., a z + z - 1}` form cluster `a`.
    #[default]
    Sequential,
    /// Greedy grouping that maximises 4-cycles inside each cluster.
    CycleMax,
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Self::Sequential),
            "cycle-max" | "cycle_max" => Ok(Self::CycleMax),
            _ => Err(Error::InvalidArgument(format!(
                "unknown clustering method {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Clustering {
    z: usize,
    clusters: Vec<Vec<usize>>,
    cluster_vns: Vec<Vec<usize>>,
}

impl Clustering {
    /// Builds a clustering from explicit CN groups, validating the partition.
    pub fn from_groups(
        graph: &TannerGraph,
        z: usize,
        mut clusters: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let m = graph.num_cns();
        if z == 0 || z > m {
            return Err(Error::Clustering(format!(
                "cluster size {z} outside [1, {m}]"
            )));
        }
        if clusters.len() != m.div_ceil(z) {
            return Err(Error::Clustering(format!(
                "{} clusters given, expected {}",
                clusters.len(),
                m.div_ceil(z)
            )));
        }
        let mut seen = vec![false; m];
        for group in &mut clusters {
            group.sort_unstable();
            if group.is_empty() || group.len() > z {
                return Err(Error::Clustering(format!(
                    "cluster of size {}",
                    group.len()
                )));
            }
            for &c in group.iter() {
                if c >= m || std::mem::replace(&mut seen[c], true) {
                    return Err(Error::Clustering(format!(
                        "CN {c} repeated or out of range"
                    )));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Clustering("clusters do not cover every CN".into()));
        }
        let cluster_vns: Vec<Vec<usize>> = clusters
            .iter()
            .map(|group| {
                let mut vns: Vec<usize> = group
                    .iter()
                    .flat_map(|&c| graph.cn_neighbors(c).iter().copied())
                    .collect();
                vns.sort_unstable();
                vns.dedup();
                vns
            })
            .collect();
        if let Some(a) = cluster_vns.iter().position(|v| v.len() > MAX_CLUSTER_VNS) {
            return Err(Error::Clustering(format!(
                "cluster {a} touches {} VNs, more than {MAX_CLUSTER_VNS}",
                cluster_vns[a].len()
            )));
        }
        Ok(Self {
            z,
            clusters,
            cluster_vns,
        })
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cns(&self, a: usize) -> &[usize] {
        &self.clusters[a]
    }

    /// Ascending VNs adjacent to cluster `a`.
    pub fn vns(&self, a: usize) -> &[usize] {
        &self.cluster_vns[a]
    }

    /// `l_a`, the number of VNs adjacent to cluster `a`.
    pub fn neighbor_count(&self, a: usize) -> usize {
        self.cluster_vns[a].len()
    }

    /// Number of (cluster, state) pairs, `sum_a 2^l_a`. Saturates at `u128::MAX`.
    pub fn state_space_size(&self) -> u128 {
        self.cluster_vns
            .iter()
            .map(|v| 1u128.checked_shl(v.len() as u32).unwrap_or(u128::MAX))
            .fold(0u128, u128::saturating_add)
    }
}

/// Groups the CNs of `graph` into `ceil(m / z)` clusters.
pub fn make_clusters(graph: &TannerGraph, z: usize, method: ClusterMethod) -> Result<Clustering> {
    let m = graph.num_cns();
    if z == 0 || z > m {
        return Err(Error::Clustering(format!(
            "cluster size {z} outside [1, {m}]"
        )));
    }
    let groups = match method {
        ClusterMethod::Sequential => (0..m.div_ceil(z))
            .map(|a| (a * z..((a + 1) * z).min(m)).collect())
            .collect(),
        ClusterMethod::CycleMax => cycle_max_groups(graph, z),
    };
    Clustering::from_groups(graph, z, groups)
}

/// Number of 4-cycles through each pair of CNs: `C(|N(c1) ∩ N(c2)|, 2)`.
fn pair_four_cycles(graph: &TannerGraph) -> HashMap<(usize, usize), usize> {
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    for v in 0..graph.num_vns() {
        let cns = graph.vn_neighbors(v);
        for (i, &c1) in cns.iter().enumerate() {
            for &c2 in &cns[i + 1..] {
                *shared.entry((c1, c2)).or_default() += 1;
            }
        }
    }
    shared
        .into_iter()
        .filter(|&(_, s)| s >= 2)
        .map(|(k, s)| (k, s * (s - 1) / 2))
        .collect()
}

/// Greedy growth: each cluster is seeded with the lowest unassigned CN and
/// extended one CN at a time by the candidate adding the most 4-cycles to the
/// induced subgraph (ties to the lowest index) until it holds `z` CNs.
fn cycle_max_groups(graph: &TannerGraph, z: usize) -> Vec<Vec<usize>> {
    let m = graph.num_cns();
    let cycles = pair_four_cycles(graph);
    let mut partners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (&(c1, c2), &k) in &cycles {
        partners[c1].push((c2, k));
        partners[c2].push((c1, k));
    }
    let mut assigned = vec![false; m];
    let mut gain = vec![0usize; m];
    let mut groups = Vec::with_capacity(m.div_ceil(z));
    let mut next_seed = 0;
    while groups.len() < m.div_ceil(z) {
        while assigned[next_seed] {
            next_seed += 1;
        }
        let mut group = vec![next_seed];
        assigned[next_seed] = true;
        let mut touched: Vec<usize> = Vec::new();
        let absorb = |c: usize, gain: &mut Vec<usize>, touched: &mut Vec<usize>| {
            for &(other, k) in &partners[c] {
                if gain[other] == 0 {
                    touched.push(other);
                }
                gain[other] += k;
            }
        };
        absorb(next_seed, &mut gain, &mut touched);
        while group.len() < z {
            // best gain among touched candidates, else lowest unassigned
            let best = touched
                .iter()
                .copied()
                .filter(|&c| !assigned[c])
                .max_by(|&a, &b| gain[a].cmp(&gain[b]).then(b.cmp(&a)));
            let pick = match best {
                Some(c) if gain[c] > 0 => c,
                _ => match (0..m).find(|&c| !assigned[c]) {
                    Some(c) => c,
                    None => break,
                },
            };
            assigned[pick] = true;
            group.push(pick);
            absorb(pick, &mut gain, &mut touched);
        }
        for c in touched {
            gain[c] = 0;
        }
        groups.push(group);
    }
    groups
}

/// Total 4-cycles inside the clusters of `clustering`.
pub fn intra_cluster_four_cycles(graph: &TannerGraph, clustering: &Clustering) -> usize {
    let cycles = pair_four_cycles(graph);
    (0..clustering.num_clusters())
        .map(|a| {
            let cns = clustering.cns(a);
            let mut total = 0;
            for (i, &c1) in cns.iter().enumerate() {
                for &c2 in &cns[i + 1..] {
                    total += cycles.get(&(c1.min(c2), c1.max(c2))).copied().unwrap_or(0);
                }
            }
            total
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_ab_code, ParityCheckMatrix};

    fn graph(rows: usize, cols: usize, entries: &[(usize, usize)]) -> TannerGraph {
        TannerGraph::new(
            &ParityCheckMatrix::from_entries(rows, cols, entries.iter().copied()).unwrap(),
        )
    }

    #[test]
    fn singleton_clusters_for_ab() {
        let g = TannerGraph::new(&build_ab_code(3, 5).unwrap());
        let cl = make_clusters(&g, 1, ClusterMethod::Sequential).unwrap();
        assert_eq!(cl.num_clusters(), 15);
        for a in 0..15 {
            assert_eq!(cl.cns(a), &[a]);
            assert_eq!(cl.neighbor_count(a), 5);
        }
        let total: usize = (0..15).map(|a| cl.neighbor_count(a)).sum();
        assert_eq!(total, g.num_edges());
        assert_eq!(cl.state_space_size(), 480);
        // all methods coincide for z = 1
        assert_eq!(make_clusters(&g, 1, ClusterMethod::CycleMax).unwrap(), cl);
    }

    #[test]
    fn single_cluster_covers_everything() {
        let g = TannerGraph::new(&build_ab_code(3, 5).unwrap());
        let cl = make_clusters(&g, 15, ClusterMethod::Sequential).unwrap();
        assert_eq!(cl.num_clusters(), 1);
        assert_eq!(cl.vns(0), (0..25).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn uneven_last_cluster() {
        let g = TannerGraph::new(&build_ab_code(3, 5).unwrap());
        let cl = make_clusters(&g, 4, ClusterMethod::Sequential).unwrap();
        assert_eq!(cl.num_clusters(), 4);
        assert_eq!(cl.cns(3), &[12, 13, 14]);
        for method in [ClusterMethod::Sequential, ClusterMethod::CycleMax] {
            let cl = make_clusters(&g, 4, method).unwrap();
            for a in 0..cl.num_clusters() {
                let kmax = cl.cns(a).iter().map(|&c| g.cn_degree(c)).max().unwrap();
                assert!(cl.neighbor_count(a) <= kmax * cl.z());
            }
        }
    }

    #[test]
    fn z_out_of_range() {
        let g = TannerGraph::new(&build_ab_code(3, 5).unwrap());
        assert!(make_clusters(&g, 0, ClusterMethod::Sequential).is_err());
        assert!(make_clusters(&g, 16, ClusterMethod::Sequential).is_err());
    }

    #[test]
    fn two_cn_four_cycle_grouped() {
        let g = graph(2, 3, &[(0, 0), (0, 1), (1, 0), (1, 1), (1, 2)]);
        let cl = make_clusters(&g, 2, ClusterMethod::CycleMax).unwrap();
        assert_eq!(cl.num_clusters(), 1);
        assert_eq!(cl.cns(0), &[0, 1]);
        assert_eq!(intra_cluster_four_cycles(&g, &cl), 1);
    }

    /// Brute force over all pairings of 4 CNs into 2 clusters of 2.
    #[test]
    fn cycle_max_matches_exhaustive_optimum() {
        // c0/c2 share VNs {0,1}; c1/c3 share {2,3}; c0/c1 share only VN 4
        let g = graph(
            4,
            6,
            &[
                (0, 0),
                (0, 1),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 0),
                (2, 1),
                (2, 5),
                (3, 2),
                (3, 3),
                (3, 5),
            ],
        );
        let pairings = [
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0, 2], vec![1, 3]],
            vec![vec![0, 3], vec![1, 2]],
        ];
        let best = pairings
            .iter()
            .map(|p| {
                let cl = Clustering::from_groups(&g, 2, p.clone()).unwrap();
                (intra_cluster_four_cycles(&g, &cl), p.clone())
            })
            .max_by_key(|(k, _)| *k)
            .unwrap();
        assert_eq!(best.0, 2);
        let cl = make_clusters(&g, 2, ClusterMethod::CycleMax).unwrap();
        assert_eq!(intra_cluster_four_cycles(&g, &cl), best.0);
        assert_eq!(cl.cns(0), &[0, 2]);
        assert_eq!(cl.cns(1), &[1, 3]);
        let seq = make_clusters(&g, 2, ClusterMethod::Sequential).unwrap();
        assert_eq!(intra_cluster_four_cycles(&g, &seq), 0);
    }

    #[test]
    fn from_groups_validates_partition() {
        let g = graph(2, 2, &[(0, 0), (0, 1), (1, 1)]);
        assert!(Clustering::from_groups(&g, 1, vec![vec![0], vec![0]]).is_err());
        assert!(Clustering::from_groups(&g, 1, vec![vec![0]]).is_err());
        assert!(Clustering::from_groups(&g, 2, vec![vec![0, 1]]).is_ok());
    }
}
