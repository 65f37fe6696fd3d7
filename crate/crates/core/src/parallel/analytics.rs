//! Closed-form communication, balance, and memory analytics for both
//! schemes. Partition parallelism scales with the remote-neighbor sets;
//! the mixed scheme moves every feature element between the two accelerator
//! groups and is therefore independent of the worker count.

use super::{remote_neighbors, MopPlan, PartitionPlan};
use crate::gcn::flops_node;
use crate::graph::CsrGraph;
use crate::reports::{BalanceReport, CommReport, LayerVolume, MemoryReport, MopBalance};

/// Partition-parallel feature traffic: each worker fetches its remote
/// neighbors' features every layer, forward and backward alike.
pub fn pp_comm_volume(
    g: &CsrGraph,
    plan: &PartitionPlan,
    dims: &[usize],
    elem_bytes: u64,
) -> CommReport {
    let remotes = remote_neighbors(g, plan);
    let remote_total: u64 = remotes.iter().map(|r| r.len() as u64).sum();
    let layers = dims.len() - 1;
    let per_layer: Vec<LayerVolume> = (0..layers)
        .map(|l| {
            let elems = remote_total * dims[l] as u64;
            LayerVolume {
                fwd_elems: elems,
                bwd_elems: elems,
                fwd_bytes: elems * elem_bytes,
                bwd_bytes: elems * elem_bytes,
            }
        })
        .collect();
    let feature_sum: u64 = dims[..layers].iter().map(|&d| d as u64).sum();
    let per_worker: Vec<u64> = remotes
        .iter()
        .map(|r| 2 * r.len() as u64 * feature_sum)
        .collect();
    CommReport::new("pp", plan.num_workers(), per_layer, per_worker)
}

/// Partition-parallel per-worker FLOPs from the per-node cost
/// d_l * (d_{l+1} + deg(v)), summed over layers.
pub fn pp_flops(g: &CsrGraph, plan: &PartitionPlan, dims: &[usize]) -> BalanceReport {
    let layers = dims.len() - 1;
    let per_worker: Vec<u64> = (0..plan.num_workers())
        .map(|i| {
            plan.members(i)
                .iter()
                .map(|&v| {
                    let deg = g.row(v).len() as u64;
                    (0..layers)
                        .map(|l| flops_node(deg, dims[l] as u64, dims[l + 1] as u64))
                        .sum::<u64>()
                })
                .sum()
        })
        .collect();
    BalanceReport::new("pp", plan.num_workers(), per_worker)
}

/// Partition-parallel feature memory: every worker retains activations for
/// its own nodes plus its duplicated remote neighbors, across all layers.
pub fn pp_memory(
    g: &CsrGraph,
    plan: &PartitionPlan,
    dims: &[usize],
    elem_bytes: u64,
) -> MemoryReport {
    let remotes = remote_neighbors(g, plan);
    let dim_sum: u64 = dims.iter().map(|&d| d as u64).sum();
    let per_worker: Vec<u64> = (0..plan.num_workers())
        .map(|i| (plan.members(i).len() + remotes[i].len()) as u64 * dim_sum * elem_bytes)
        .collect();
    MemoryReport::new("pp", plan.num_workers(), per_worker)
}

/// Mixed-scheme all-to-all volume. Per layer, the aggregation group hands
/// n*d_l elements to the update group and receives n*d_{l+1} back; backward
/// mirrors the forward legs. Every element crosses between the groups (the
/// two groups are distinct devices); `colocated` keeps the 1/m share that
/// would stay on-device when the groups share hardware.
pub fn mop_comm_volume(
    n: usize,
    dims: &[usize],
    m: usize,
    elem_bytes: u64,
    colocated: bool,
) -> CommReport {
    let layers = dims.len() - 1;
    let scale = |elems: u64| -> u64 {
        if colocated {
            elems - elems / m as u64
        } else {
            elems
        }
    };
    let per_layer: Vec<LayerVolume> = (0..layers)
        .map(|l| {
            let elems = scale(n as u64 * dims[l] as u64) + scale(n as u64 * dims[l + 1] as u64);
            LayerVolume {
                fwd_elems: elems,
                bwd_elems: elems,
                fwd_bytes: elems * elem_bytes,
                bwd_bytes: elems * elem_bytes,
            }
        })
        .collect();
    // received per update worker (node rows) plus per aggregation worker
    // (feature slices), forward + backward
    let plan = MopPlan {
        num_workers: m,
        num_nodes: n,
        dims: dims.to_vec(),
    };
    let mut per_worker = Vec::with_capacity(2 * m);
    for i in 0..m {
        let widths: u64 = (0..layers)
            .map(|l| {
                let (p, q) = plan.feature_range(l + 1, i);
                (q - p) as u64
            })
            .sum();
        per_worker.push(scale(2 * n as u64 * widths));
    }
    for i in 0..m {
        let (lo, hi) = plan.node_range(i);
        let dim_sum: u64 = dims[..layers].iter().map(|&d| d as u64).sum();
        per_worker.push(scale(2 * (hi - lo) as u64 * dim_sum));
    }
    CommReport::new("mop", m, per_layer, per_worker)
}

/// Mixed-scheme FLOP balance, reported per accelerator group. Aggregation
/// worker i does 2*nnz flops per owned feature column; update worker i does
/// the dense 2*d_l*d_{l+1} per owned node row.
pub fn mop_flops(g: &CsrGraph, dims: &[usize], m: usize) -> MopBalance {
    let n = g.num_nodes();
    let nnz = g.nnz() as u64;
    let layers = dims.len() - 1;
    let plan = MopPlan {
        num_workers: m,
        num_nodes: n,
        dims: dims.to_vec(),
    };
    let aggregation: Vec<u64> = (0..m)
        .map(|i| {
            (0..layers)
                .map(|l| {
                    let (p, q) = plan.feature_range(l, i);
                    2 * nnz * (q - p) as u64
                })
                .sum()
        })
        .collect();
    let update: Vec<u64> = (0..m)
        .map(|i| {
            let (lo, hi) = plan.node_range(i);
            (0..layers)
                .map(|l| 2 * (dims[l] * dims[l + 1]) as u64 * (hi - lo) as u64)
                .sum()
        })
        .collect();
    MopBalance {
        aggregation: BalanceReport::new("mop-aggregation", m, aggregation),
        update: BalanceReport::new("mop-update", m, update),
    }
}

/// Mixed-scheme feature memory. Aggregation workers hold feature-column
/// slices of every layer; update workers hold node-row slices. Each group's
/// total is n * sum(dims) * width regardless of m.
pub fn mop_memory(n: usize, dims: &[usize], m: usize, elem_bytes: u64) -> MemoryReport {
    let plan = MopPlan {
        num_workers: m,
        num_nodes: n,
        dims: dims.to_vec(),
    };
    let dim_sum: u64 = dims.iter().map(|&d| d as u64).sum();
    let mut per_worker = Vec::with_capacity(2 * m);
    for i in 0..m {
        let widths: u64 = (0..dims.len())
            .map(|l| {
                let (p, q) = plan.feature_range(l, i);
                (q - p) as u64
            })
            .sum();
        per_worker.push(n as u64 * widths * elem_bytes);
    }
    for i in 0..m {
        let (lo, hi) = plan.node_range(i);
        per_worker.push((hi - lo) as u64 * dim_sum * elem_bytes);
    }
    MemoryReport::new("mop", m, per_worker)
}
