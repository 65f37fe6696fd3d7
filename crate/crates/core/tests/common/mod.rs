//! Shared test oracles: dense linear algebra over plain Vec<Vec<f64>>,
//! kept deliberately independent of the CSR kernels they check.

#![allow(dead_code)]

use mixlab_core::graph::CsrGraph;
use mixlab_core::kernels::{Bitmask, FeatureMatrix};

pub type Dense = Vec<Vec<f64>>;

pub fn dense_zeros(rows: usize, cols: usize) -> Dense {
    vec![vec![0.0; cols]; rows]
}

pub fn dense_from_csr(g: &CsrGraph) -> Dense {
    let n = g.num_nodes();
    let mut a = dense_zeros(n, n);
    for u in 0..n {
        for (v, w) in g.row_entries(u) {
            a[u][v] = w;
        }
    }
    a
}

pub fn dense_from_features(m: &FeatureMatrix<f64>) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn dense_matmul(a: &Dense, b: &Dense) -> Dense {
    let (ra, ca) = (a.len(), a[0].len());
    let cb = b[0].len();
    let mut out = dense_zeros(ra, cb);
    for i in 0..ra {
        for k in 0..ca {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..cb {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn dense_transpose(a: &Dense) -> Dense {
    let (r, c) = (a.len(), a[0].len());
    let mut out = dense_zeros(c, r);
    for i in 0..r {
        for j in 0..c {
            out[j][i] = a[i][j];
        }
    }
    out
}

/// Dense symmetric normalization: D^{-1/2} (A + I) D^{-1/2} built with
/// explicit dense matrices.
pub fn dense_normalize(g: &CsrGraph) -> Dense {
    let n = g.num_nodes();
    let mut a_tilde = dense_from_csr(g);
    for (v, row) in a_tilde.iter_mut().enumerate() {
        row[v] = 1.0; // union with the identity
    }
    let deg: Vec<f64> = a_tilde.iter().map(|row| row.iter().sum()).collect();
    let mut out = dense_zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if a_tilde[u][v] != 0.0 {
                out[u][v] = a_tilde[u][v] / (deg[u] * deg[v]).sqrt();
            }
        }
    }
    out
}

pub fn dense_apply_mask(a: &Dense, mask: &Bitmask) -> Dense {
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if !mask.get(i, j) {
                *x = 0.0;
            }
        }
    }
    out
}

pub fn dense_relu(a: &Dense) -> Dense {
    a.iter()
        .map(|row| row.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect())
        .collect()
}

pub fn max_abs_diff_dense(a: &Dense, m: &FeatureMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            worst = worst.max((a[i][j] - m.get(i, j)).abs());
        }
    }
    worst
}

/// Deterministic pseudo-random dense feature matrix for tests.
pub fn random_features(rows: usize, cols: usize, seed: u64) -> FeatureMatrix<f64> {
    let mut m = FeatureMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let u = mixlab_core::prng::uniform(seed, 0xFEED, &[i as u64, j as u64]);
            m.set(i, j, 2.0 * u - 1.0);
        }
    }
    m
}

/// Deterministic random symmetric graph for tests (edge probability p).
pub fn random_graph(n: usize, p: f64, seed: u64) -> CsrGraph {
    mixlab_core::graph::gen_erdos_renyi(n, p, seed).unwrap()
}
