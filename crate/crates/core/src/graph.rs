//! Graph representation, normalization, and synthetic generators.
//!
//! `CsrGraph` is the home of the adjacency matrix and its symmetrically
//! normalized form: rows are sorted, construction is validated, and the
//! struct is immutable afterwards so it can be shared freely across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::FeatureMatrix;
use crate::prng::{self, stream, Counter};

/// Compressed sparse row adjacency with optional edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Option<Vec<f64>>,
    symmetric: bool,
}

impl CsrGraph {
    /// Build from raw CSR arrays, validating every structural invariant.
    pub fn from_parts(
        num_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Option<Vec<f64>>,
        symmetric: bool,
    ) -> Result<Self> {
        if row_offsets.len() != num_nodes + 1 {
            return Err(Error::Contract(format!(
                "row_offsets length {} != n+1 = {}",
                row_offsets.len(),
                num_nodes + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[num_nodes] != col_indices.len() {
            return Err(Error::Contract(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        for w in row_offsets.windows(2) {
            if w[0] > w[1] {
                return Err(Error::Contract("row_offsets must be non-decreasing".into()));
            }
        }
        for r in 0..num_nodes {
            let row = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            for pair in row.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(Error::Contract(format!(
                        "row {r} columns must be strictly increasing"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= num_nodes {
                    return Err(Error::Range(format!(
                        "row {r} has column {last} >= n = {num_nodes}"
                    )));
                }
            }
        }
        if let Some(v) = &values {
            if v.len() != col_indices.len() {
                return Err(Error::Contract("values length != nnz".into()));
            }
            if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::Contract("values must be finite and > 0".into()));
            }
        }
        let g = Self {
            num_nodes,
            row_offsets,
            col_indices,
            values,
            symmetric,
        };
        if symmetric && !g.is_structurally_symmetric() {
            return Err(Error::Contract(
                "symmetric flag set but edge set is not closed under reversal".into(),
            ));
        }
        Ok(g)
    }

    /// Build from an edge list. Duplicates collapse to one edge; if
    /// `make_symmetric`, the edge set is closed under reversal. Self-loops
    /// in the input are preserved.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        make_symmetric: bool,
    ) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Range(format!(
                    "edge ({u},{v}) out of range for n = {num_nodes}"
                )));
            }
            pairs.push((u, v));
            if make_symmetric && u != v {
                pairs.push((v, u));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut row_offsets = vec![0usize; num_nodes + 1];
        for &(u, _) in &pairs {
            row_offsets[u + 1] += 1;
        }
        for i in 1..=num_nodes {
            row_offsets[i] += row_offsets[i - 1];
        }
        let col_indices: Vec<usize> = pairs.iter().map(|&(_, v)| v).collect();

        let mut g = Self {
            num_nodes,
            row_offsets,
            col_indices,
            values: None,
            symmetric: make_symmetric,
        };
        if !make_symmetric {
            g.symmetric = g.is_structurally_symmetric();
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_weighted(&self) -> bool {
        self.values.is_some()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    /// Neighbor ids of `v`, ascending.
    pub fn row(&self, v: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    /// (neighbor, weight) pairs for row `v`; weight is 1.0 when unweighted.
    pub fn row_entries(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.row_offsets[v];
        let end = self.row_offsets[v + 1];
        self.col_indices[start..end]
            .iter()
            .enumerate()
            .map(move |(k, &c)| {
                let w = match &self.values {
                    Some(vals) => vals[start + k],
                    None => 1.0,
                };
                (c, w)
            })
    }

    /// Degree of `v` (row length). Errors when `v >= n`.
    pub fn degree(&self, v: usize) -> Result<usize> {
        if v >= self.num_nodes {
            return Err(Error::Range(format!("node {v} >= n = {}", self.num_nodes)));
        }
        Ok(self.row_offsets[v + 1] - self.row_offsets[v])
    }

    /// Count of self-loop edges present.
    pub fn self_loops(&self) -> usize {
        (0..self.num_nodes)
            .filter(|&v| self.row(v).binary_search(&v).is_ok())
            .count()
    }

    /// Edge-set equality with the transpose.
    pub fn is_structurally_symmetric(&self) -> bool {
        for u in 0..self.num_nodes {
            for &v in self.row(u) {
                if self.row(v).binary_search(&u).is_err() {
                    return false;
                }
            }
        }
        true
    }

    /// Lookup weight at (u, v); `None` when the edge is absent.
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let start = self.row_offsets[u];
        let row = self.row(u);
        row.binary_search(&v).ok().map(|k| match &self.values {
            Some(vals) => vals[start + k],
            None => 1.0,
        })
    }

    /// Symmetric normalization with self-loops: add the identity to the
    /// edge set (merging any existing self-loops), then weight edge (u, v)
    /// by `1/sqrt(deg(u) * deg(v))` where degrees count the added loop.
    ///
    /// Requires a symmetric, unweighted graph.
    pub fn normalize(&self) -> Result<CsrGraph> {
        if !self.symmetric {
            return Err(Error::Contract(
                "normalize requires a symmetric graph".into(),
            ));
        }
        if self.values.is_some() {
            return Err(Error::Contract(
                "normalize requires an unweighted graph".into(),
            ));
        }
        let n = self.num_nodes;

        // Edge set of A + I: merge the loop into each row (set union).
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + n);
        row_offsets.push(0);
        for v in 0..n {
            let row = self.row(v);
            match row.binary_search(&v) {
                Ok(_) => col_indices.extend_from_slice(row),
                Err(pos) => {
                    col_indices.extend_from_slice(&row[..pos]);
                    col_indices.push(v);
                    col_indices.extend_from_slice(&row[pos..]);
                }
            }
            row_offsets.push(col_indices.len());
        }

        let degree_with_loop: Vec<f64> = (0..n)
            .map(|v| (row_offsets[v + 1] - row_offsets[v]) as f64)
            .collect();
        let inv_sqrt: Vec<f64> = degree_with_loop.iter().map(|d| 1.0 / d.sqrt()).collect();

        let mut values = Vec::with_capacity(col_indices.len());
        for u in 0..n {
            for &v in &col_indices[row_offsets[u]..row_offsets[u + 1]] {
                values.push(inv_sqrt[u] * inv_sqrt[v]);
            }
        }

        Ok(CsrGraph {
            num_nodes: n,
            row_offsets,
            col_indices,
            values: Some(values),
            symmetric: true,
        })
    }
}

/// A graph together with node features and labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: CsrGraph,
    pub features: FeatureMatrix<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(
        graph: CsrGraph,
        features: FeatureMatrix<f64>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::DimMismatch(format!(
                "feature rows {} != n = {n}",
                features.rows()
            )));
        }
        if labels.len() != n {
            return Err(Error::DimMismatch(format!(
                "labels length {} != n = {n}",
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y >= num_classes) {
            return Err(Error::Range("label out of [0, num_classes)".into()));
        }
        Ok(Self {
            graph,
            features,
            labels,
            num_classes,
        })
    }

    /// Deterministic synthetic features and labels for a graph.
    pub fn synthetic(
        graph: CsrGraph,
        feature_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        let mut features = FeatureMatrix::zeros(n, feature_dim);
        for v in 0..n {
            for j in 0..feature_dim {
                let u = prng::uniform(seed, stream::FEATURES, &[v as u64, j as u64]);
                features.set(v, j, 2.0 * u - 1.0);
            }
        }
        let labels: Vec<usize> = (0..n)
            .map(|v| (prng::keyed(seed, stream::LABELS, &[v as u64]) % num_classes as u64) as usize)
            .collect();
        Dataset::new(graph, features, labels, num_classes)
    }
}

/// Synthetic graph family, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Path {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    Complete {
        n: usize,
    },
    /// One hub connected to `leaves` leaf nodes; the hub is node 0.
    Star {
        leaves: usize,
    },
    ErdosRenyi {
        n: usize,
        p: f64,
    },
    Rmat {
        n: usize,
        edges: usize,
        #[serde(default = "default_rmat_probs")]
        probs: [f64; 4],
    },
    /// All pairs within position distance `bandwidth` are connected with
    /// probability `density`; pairs at exactly `bandwidth` always are.
    Banded {
        n: usize,
        bandwidth: usize,
        density: f64,
    },
}

fn default_rmat_probs() -> [f64; 4] {
    [0.57, 0.19, 0.19, 0.05]
}

/// Generate a deterministic symmetric graph for the given spec and seed.
pub fn gen_synthetic(spec: &GraphSpec, seed: u64) -> Result<CsrGraph> {
    match *spec {
        GraphSpec::Path { n } => gen_path(n),
        GraphSpec::Cycle { n } => gen_cycle(n),
        GraphSpec::Grid { rows, cols } => gen_grid(rows, cols),
        GraphSpec::Complete { n } => gen_complete(n),
        GraphSpec::Star { leaves } => gen_star(leaves),
        GraphSpec::ErdosRenyi { n, p } => gen_erdos_renyi(n, p, seed),
        GraphSpec::Rmat { n, edges, probs } => gen_rmat(n, edges, probs, seed),
        GraphSpec::Banded {
            n,
            bandwidth,
            density,
        } => gen_banded(n, bandwidth, density, seed),
    }
}

pub fn gen_path(n: usize) -> Result<CsrGraph> {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
    CsrGraph::from_edges(n, &edges, true)
}

pub fn gen_cycle(n: usize) -> Result<CsrGraph> {
    if n < 3 {
        return Err(Error::InvalidParam(format!("cycle needs n >= 3, got {n}")));
    }
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
    edges.push((n - 1, 0));
    CsrGraph::from_edges(n, &edges, true)
}

/// 4-neighbor lattice, row-major node ids.
pub fn gen_grid(rows: usize, cols: usize) -> Result<CsrGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParam(
            "grid dimensions must be positive".into(),
        ));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    CsrGraph::from_edges(rows * cols, &edges, true)
}

pub fn gen_complete(n: usize) -> Result<CsrGraph> {
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push((u, v));
        }
    }
    CsrGraph::from_edges(n, &edges, true)
}

pub fn gen_star(leaves: usize) -> Result<CsrGraph> {
    if leaves == 0 {
        return Err(Error::InvalidParam("star needs at least one leaf".into()));
    }
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
    CsrGraph::from_edges(leaves + 1, &edges, true)
}

pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<CsrGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParam(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if prng::uniform(seed, stream::GRAPH, &[u as u64, v as u64]) < p {
                edges.push((u, v));
            }
        }
    }
    CsrGraph::from_edges(n, &edges, true)
}

/// Recursive-quadrant random graph. `edges` counts directed samples; the
/// result is symmetrized and deduplicated, so the final undirected edge
/// count is typically somewhat lower. Self-loop samples are dropped.
pub fn gen_rmat(n: usize, edges: usize, probs: [f64; 4], seed: u64) -> Result<CsrGraph> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParam(format!(
            "rmat node count {n} must be a power of two"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || probs.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParam(format!(
            "rmat probabilities must be non-negative and sum to 1, got {probs:?}"
        )));
    }
    let scale = n.trailing_zeros();
    let mut rng = Counter::new(seed, stream::GRAPH);
    let mut list = Vec::with_capacity(edges);
    for _ in 0..edges {
        let (mut u, mut v) = (0usize, 0usize);
        for _ in 0..scale {
            let r = rng.next_f64();
            let (du, dv) = if r < probs[0] {
                (0, 0)
            } else if r < probs[0] + probs[1] {
                (0, 1)
            } else if r < probs[0] + probs[1] + probs[2] {
                (1, 0)
            } else {
                (1, 1)
            };
            u = (u << 1) | du;
            v = (v << 1) | dv;
        }
        if u != v {
            list.push((u, v));
        }
    }
    CsrGraph::from_edges(n, &list, true)
}

/// Banded graph: node ids are also positions. Every pair at distance exactly
/// `bandwidth` is connected, so the natural ordering has bandwidth exactly
/// `bandwidth`; closer pairs are included with probability `density`.
/// `density = 1.0` gives the full band (the path power graph).
pub fn gen_banded(n: usize, bandwidth: usize, density: f64, seed: u64) -> Result<CsrGraph> {
    if bandwidth == 0 || bandwidth >= n {
        return Err(Error::InvalidParam(format!(
            "bandwidth {bandwidth} must be in [1, n) for n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParam(format!(
            "density {density} outside [0, 1]"
        )));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n.min(u + bandwidth + 1) {
            let rail = v - u == bandwidth;
            if rail || prng::uniform(seed, stream::GRAPH, &[u as u64, v as u64]) < density {
                edges.push((u, v));
            }
        }
    }
    CsrGraph::from_edges(n, &edges, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_dedup_and_closure() {
        // duplicate edge collapses; symmetric closure adds reversals
        let g = CsrGraph::from_edges(3, &[(0, 1), (0, 1), (1, 2)], true).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.nnz(), 4);
        assert_eq!(g.row(0), &[1]);
        assert_eq!(g.row(1), &[0, 2]);
        assert_eq!(g.row(2), &[1]);
    }

    #[test]
    fn empty_graph() {
        let g = CsrGraph::from_edges(0, &[], true).unwrap();
        assert_eq!(g.num_nodes(), 0);
        assert_eq!(g.nnz(), 0);
    }

    #[test]
    fn from_parts_rejects_bad_offsets() {
        assert!(CsrGraph::from_parts(2, vec![0, 2, 1], vec![0, 1], None, false).is_err());
        assert!(CsrGraph::from_parts(2, vec![0, 1], vec![0], None, false).is_err());
        assert!(CsrGraph::from_parts(1, vec![0, 1], vec![3], None, false).is_err());
    }

    #[test]
    fn from_parts_rejects_nonpositive_values() {
        let err = CsrGraph::from_parts(2, vec![0, 1, 2], vec![1, 0], Some(vec![1.0, -0.5]), true);
        assert!(err.is_err());
    }

    #[test]
    fn degree_and_range_error() {
        let g = gen_path(3).unwrap();
        assert_eq!(g.degree(0).unwrap(), 1);
        assert_eq!(g.degree(1).unwrap(), 2);
        assert!(g.degree(3).is_err());

        let star = gen_star(5).unwrap();
        assert_eq!(star.degree(0).unwrap(), 5);
        let isolated = CsrGraph::from_edges(2, &[], true).unwrap();
        assert_eq!(isolated.degree(1).unwrap(), 0);
    }

    #[test]
    fn normalize_single_node() {
        let g = CsrGraph::from_edges(1, &[], true).unwrap();
        let a = g.normalize().unwrap();
        assert_eq!(a.get(0, 0), Some(1.0));
    }

    #[test]
    fn normalize_path4_values() {
        let a = gen_path(4).unwrap().normalize().unwrap();
        // end node degree 2 (with loop), middle degree 3
        let expect01 = 1.0 / (2.0f64 * 3.0).sqrt();
        assert!((a.get(0, 1).unwrap() - expect01).abs() < 1e-15);
        assert!((a.get(1, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(a.is_structurally_symmetric());
    }

    #[test]
    fn normalize_complete_k3() {
        let a = gen_complete(3).unwrap().normalize().unwrap();
        for u in 0..3 {
            for v in 0..3 {
                assert!((a.get(u, v).unwrap() - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalize_merges_existing_self_loop() {
        let g = CsrGraph::from_edges(2, &[(0, 0), (0, 1)], true).unwrap();
        let a = g.normalize().unwrap();
        // row 0 of A+I is {0, 1}: no duplicate loop entry
        assert_eq!(a.row(0), &[0, 1]);
        assert!((a.get(0, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_asymmetric() {
        let g = CsrGraph::from_edges(2, &[(0, 1)], false).unwrap();
        assert!(!g.is_symmetric());
        assert!(g.normalize().is_err());
    }

    #[test]
    fn generators_basic_shapes() {
        let p = gen_path(4).unwrap();
        assert_eq!(p.nnz(), 6); // 3 undirected edges

        let c = gen_cycle(12).unwrap();
        assert_eq!(c.nnz(), 24);
        for v in 0..12 {
            assert_eq!(c.degree(v).unwrap(), 2);
        }

        let g = gen_grid(3, 3).unwrap();
        assert_eq!(g.num_nodes(), 9);
        assert_eq!(g.degree(4).unwrap(), 4); // center

        let k = gen_complete(4).unwrap();
        assert_eq!(k.nnz(), 12);
    }

    #[test]
    fn rmat_deterministic() {
        let spec = GraphSpec::Rmat {
            n: 1 << 10,
            edges: 8 << 10,
            probs: default_rmat_probs(),
        };
        let a = gen_synthetic(&spec, 7).unwrap();
        let b = gen_synthetic(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.is_symmetric());
        let c = gen_synthetic(&spec, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rmat_rejects_bad_probs() {
        assert!(gen_rmat(16, 32, [0.5, 0.5, 0.5, 0.5], 1).is_err());
        assert!(gen_rmat(17, 32, default_rmat_probs(), 1).is_err());
    }

    #[test]
    fn banded_has_exact_rail() {
        let g = gen_banded(20, 5, 0.3, 3).unwrap();
        for u in 0..15 {
            assert!(
                g.get(u, u + 5).is_some(),
                "rail edge ({u},{}) missing",
                u + 5
            );
        }
        assert!(g.get(0, 6).is_none()); // beyond band
    }

    #[test]
    fn erdos_renyi_extremes() {
        let empty = gen_erdos_renyi(8, 0.0, 1).unwrap();
        assert_eq!(empty.nnz(), 0);
        let full = gen_erdos_renyi(8, 1.0, 1).unwrap();
        assert_eq!(full.nnz(), 8 * 7);
        assert!(gen_erdos_renyi(8, 1.5, 1).is_err());
    }
}
