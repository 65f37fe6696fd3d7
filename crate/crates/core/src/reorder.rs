//! Node reordering: reverse Cuthill-McKee, graph bandwidth, and the
//! minimum-granularity / stage-count formulas the pipeline scheduler
//! relies on.

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::kernels::{FeatureMatrix, Real};

/// A node ordering. `perm[p]` is the node at position p; `inverse[v]` is the
/// position of node v.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOrdering {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl NodeOrdering {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inverse = vec![usize::MAX; n];
        for (p, &v) in perm.iter().enumerate() {
            if v >= n || inverse[v] != usize::MAX {
                return Err(Error::Contract("not a permutation".into()));
            }
            inverse[v] = p;
        }
        Ok(Self { perm, inverse })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Node at position p.
    pub fn node_at(&self, p: usize) -> usize {
        self.perm[p]
    }

    /// Position of node v.
    pub fn position_of(&self, v: usize) -> usize {
        self.inverse[v]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> NodeOrdering {
        Self {
            perm: self.inverse.clone(),
            inverse: self.perm.clone(),
        }
    }
}

/// Reverse Cuthill-McKee. Per connected component (components taken in
/// ascending smallest-id order): pick a minimum-degree node, refine it with
/// one BFS sweep to a pseudo-peripheral start, then BFS enqueuing neighbors
/// by ascending degree (ties by id) and reverse the component's order.
/// Deterministic by construction.
pub fn rcm_order(g: &CsrGraph) -> Result<NodeOrdering> {
    if !g.is_symmetric() {
        return Err(Error::Contract("rcm requires a symmetric graph".into()));
    }
    let n = g.num_nodes();
    let deg = |v: usize| g.row(v).len();
    let mut visited = vec![false; n];
    let mut perm = Vec::with_capacity(n);

    for comp_seed in 0..n {
        if visited[comp_seed] {
            continue;
        }
        // Min-degree node of this component (ties by id).
        let component = bfs_collect(g, comp_seed);
        let u0 = *component
            .iter()
            .min_by_key(|&&v| (deg(v), v))
            .expect("component not empty");
        // One refinement sweep: min-degree node in the farthest BFS level.
        let last_level = bfs_last_level(g, u0);
        let start = *last_level
            .iter()
            .min_by_key(|&&v| (deg(v), v))
            .expect("level not empty");

        // Cuthill-McKee BFS from start.
        let mark = perm.len();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            perm.push(u);
            let mut nbrs: Vec<usize> = g.row(u).iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_unstable_by_key(|&v| (deg(v), v));
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        perm[mark..].reverse();
    }
    NodeOrdering::from_perm(perm)
}

fn bfs_collect(g: &CsrGraph, start: usize) -> Vec<usize> {
    let mut seen = vec![false; g.num_nodes()];
    let mut queue = std::collections::VecDeque::new();
    let mut out = Vec::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        out.push(u);
        for &v in g.row(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    out
}

fn bfs_last_level(g: &CsrGraph, start: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.num_nodes()];
    let mut queue = std::collections::VecDeque::new();
    dist[start] = 0;
    queue.push_back(start);
    let mut level = Vec::new();
    let mut level_dist = 0;
    while let Some(u) = queue.pop_front() {
        if dist[u] > level_dist {
            level_dist = dist[u];
            level.clear();
        }
        if dist[u] == level_dist {
            level.push(u);
        }
        for &v in g.row(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}

/// Graph bandwidth under an ordering: the maximum position distance between
/// endpoints of any edge. Zero for edgeless graphs.
pub fn bandwidth(g: &CsrGraph, ordering: &NodeOrdering) -> usize {
    let mut b = 0usize;
    for u in 0..g.num_nodes() {
        let pu = ordering.position_of(u);
        for &v in g.row(u) {
            let pv = ordering.position_of(v);
            b = b.max(pu.abs_diff(pv));
        }
    }
    b
}

/// Smallest per-batch fraction that permits a stall-free two-engine
/// pipeline: (n - b) / (2n).
pub fn min_granularity(n: usize, b: usize) -> Result<f64> {
    check_nb(n, b)?;
    Ok((n - b) as f64 / (2 * n) as f64)
}

/// Stage-count bound derived from the granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageBound {
    pub stages: usize,
    /// False when the bound exceeds n: unit batches cannot satisfy it.
    pub fully_pipelinable: bool,
}

/// ceil(2n / (n - b)) stages; flagged when that exceeds n.
pub fn min_stages(n: usize, b: usize) -> Result<StageBound> {
    check_nb(n, b)?;
    let stages = (2 * n).div_ceil(n - b);
    Ok(StageBound {
        stages,
        fully_pipelinable: stages <= n,
    })
}

fn check_nb(n: usize, b: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParam("n must be >= 1".into()));
    }
    if b >= n {
        return Err(Error::Contract(format!("bandwidth {b} must be < n = {n}")));
    }
    Ok(())
}

/// Relabel the graph so position becomes the node id.
pub fn apply_ordering(g: &CsrGraph, ordering: &NodeOrdering) -> Result<CsrGraph> {
    let n = g.num_nodes();
    if ordering.len() != n {
        return Err(Error::DimMismatch(format!(
            "ordering length {} != n = {n}",
            ordering.len()
        )));
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(g.nnz());
    let mut values = g.values().map(|_| Vec::with_capacity(g.nnz()));
    row_offsets.push(0);
    for p in 0..n {
        let old = ordering.node_at(p);
        let mut entries: Vec<(usize, f64)> = g
            .row_entries(old)
            .map(|(v, w)| (ordering.position_of(v), w))
            .collect();
        entries.sort_unstable_by_key(|&(c, _)| c);
        for (c, w) in entries {
            col_indices.push(c);
            if let Some(vals) = values.as_mut() {
                vals.push(w);
            }
        }
        row_offsets.push(col_indices.len());
    }
    CsrGraph::from_parts(n, row_offsets, col_indices, values, g.is_symmetric())
}

/// Permute feature rows to match a relabeled graph: new row p = old row
/// perm[p].
pub fn apply_ordering_features<T: Real>(
    features: &FeatureMatrix<T>,
    ordering: &NodeOrdering,
) -> Result<FeatureMatrix<T>> {
    if ordering.len() != features.rows() {
        return Err(Error::DimMismatch(format!(
            "ordering length {} != rows {}",
            ordering.len(),
            features.rows()
        )));
    }
    Ok(features.gather_rows(ordering.perm()))
}
