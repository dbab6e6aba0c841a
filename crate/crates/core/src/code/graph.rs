use super::ParityCheckMatrix;

/// Bipartite adjacency of a parity-check matrix with dense edge ids.
///
/// Edges are numbered row-major: the edges of check node `c` are the
/// contiguous range `cn_edges(c)`, in ascending variable-node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    cn_neighbors: Vec<Vec<usize>>,
    vn_neighbors: Vec<Vec<usize>>,
    cn_edge_start: Vec<usize>,
    /// For each VN, the edge ids matching `vn_neighbors` position by position.
    vn_edges: Vec<Vec<usize>>,
    edge_vn: Vec<usize>,
    edge_cn: Vec<usize>,
}

impl TannerGraph {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let m = h.rows();
        let n = h.cols();
        let mut cn_neighbors = Vec::with_capacity(m);
        let mut cn_edge_start = Vec::with_capacity(m + 1);
        let mut vn_neighbors = vec![Vec::new(); n];
        let mut vn_edges = vec![Vec::new(); n];
        let mut edge_vn = Vec::with_capacity(h.num_entries());
        let mut edge_cn = Vec::with_capacity(h.num_entries());
        for c in 0..m {
            cn_edge_start.push(edge_vn.len());
            for &v in h.row(c) {
                vn_neighbors[v].push(c);
                vn_edges[v].push(edge_vn.len());
                edge_vn.push(v);
                edge_cn.push(c);
            }
            cn_neighbors.push(h.row(c).to_vec());
        }
        cn_edge_start.push(edge_vn.len());
        Self {
            cn_neighbors,
            vn_neighbors,
            cn_edge_start,
            vn_edges,
            edge_vn,
            edge_cn,
        }
    }

    pub fn num_cns(&self) -> usize {
        self.cn_neighbors.len()
    }

    pub fn num_vns(&self) -> usize {
        self.vn_neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_vn.len()
    }

    /// `N(c)`, ascending.
    pub fn cn_neighbors(&self, c: usize) -> &[usize] {
        &self.cn_neighbors[c]
    }

    /// `N(v)`, ascending.
    pub fn vn_neighbors(&self, v: usize) -> &[usize] {
        &self.vn_neighbors[v]
    }

    pub fn cn_degree(&self, c: usize) -> usize {
        self.cn_neighbors[c].len()
    }

    pub fn cn_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.cn_edge_start[c]..self.cn_edge_start[c + 1]
    }

    pub fn vn_edges(&self, v: usize) -> &[usize] {
        &self.vn_edges[v]
    }

    pub fn edge_vn(&self, e: usize) -> usize {
        self.edge_vn[e]
    }

    pub fn edge_cn(&self, e: usize) -> usize {
        self.edge_cn[e]
    }

    /// Edge id of `(c, v)`, if adjacent.
    pub fn edge_id(&self, c: usize, v: usize) -> Option<usize> {
        self.cn_neighbors[c]
            .binary_search(&v)
            .ok()
            .map(|i| self.cn_edge_start[c] + i)
    }
}
