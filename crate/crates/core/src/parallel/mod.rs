//! Executable simulations of the two distribution schemes and their
//! analytics: partition parallelism (node subsets per worker, remote
//! neighbors duplicated) and the mixed scheme (feature-dimension sharding
//! for aggregation, node-dimension sharding for update, all-to-all between
//! the groups).

mod analytics;
mod execute;
mod makespan;

pub use analytics::{mop_comm_volume, mop_flops, mop_memory, pp_comm_volume, pp_flops, pp_memory};
pub use execute::{mop_execute, pp_execute};
pub use makespan::{brute_force_makespan, lpt_makespan};

use crate::balanced_range;
use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::prng::{self, stream};

/// Node ownership for partition parallelism, with per-worker member lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    num_workers: usize,
    owner: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Build from an ownership array; member lists are derived, ascending.
    pub fn from_owner(owner: Vec<usize>, num_workers: usize) -> Result<Self> {
        if num_workers == 0 {
            return Err(Error::InvalidParam("need at least one worker".into()));
        }
        let mut members = vec![Vec::new(); num_workers];
        for (v, &w) in owner.iter().enumerate() {
            if w >= num_workers {
                return Err(Error::Range(format!("owner {w} >= m = {num_workers}")));
            }
            members[w].push(v);
        }
        Ok(Self {
            num_workers,
            owner,
            members,
        })
    }

    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn owner(&self, v: usize) -> usize {
        self.owner[v]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    /// Nodes owned by worker i, ascending.
    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }
}

fn check_worker_count(n: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParam("need at least one worker".into()));
    }
    if m > n {
        return Err(Error::InvalidParam(format!(
            "m = {m} exceeds node count {n}"
        )));
    }
    Ok(())
}

/// Hash-based random partition: owner(v) = hash(seed, v) mod m.
pub fn partition_random(g: &CsrGraph, m: usize, seed: u64) -> Result<PartitionPlan> {
    check_worker_count(g.num_nodes(), m)?;
    let owner: Vec<usize> = (0..g.num_nodes())
        .map(|v| (prng::keyed(seed, stream::PARTITION, &[v as u64]) % m as u64) as usize)
        .collect();
    PartitionPlan::from_owner(owner, m)
}

/// Locality-aware stand-in for a real partitioner: grow m contiguous BFS
/// regions, each until it holds its share of the total degree (the dominant
/// per-node workload term), jumping to the smallest unassigned id when a
/// frontier empties. Deterministic.
pub fn partition_bfs(g: &CsrGraph, m: usize) -> Result<PartitionPlan> {
    let n = g.num_nodes();
    check_worker_count(n, m)?;
    let mut owner = vec![usize::MAX; n];
    let mut unassigned = n;
    let mut remaining_degree: u64 = (0..n).map(|v| g.row(v).len() as u64).sum();
    let mut next_seed = 0usize;

    for region in 0..m {
        let regions_left = m - region;
        let target = remaining_degree as f64 / regions_left as f64;
        let mut acc: u64 = 0;
        let mut taken = 0usize;
        let mut queue = std::collections::VecDeque::new();

        while unassigned > 0 {
            // every later region still needs at least one node
            if taken > 0 && unassigned == regions_left - 1 {
                break;
            }
            let v = match queue.pop_front() {
                Some(v) if owner[v] == usize::MAX => v,
                Some(_) => continue,
                None => {
                    while owner[next_seed] != usize::MAX {
                        next_seed += 1;
                    }
                    next_seed
                }
            };
            owner[v] = region;
            unassigned -= 1;
            taken += 1;
            acc += g.row(v).len() as u64;
            for &u in g.row(v) {
                if owner[u] == usize::MAX {
                    queue.push_back(u);
                }
            }
            if region + 1 < m && acc as f64 >= target {
                break;
            }
        }
        remaining_degree -= acc;
    }
    PartitionPlan::from_owner(owner, m)
}

/// Per-worker remote neighbor sets: nodes a worker's subgraph touches but
/// does not own. A node needed by several workers appears in each of their
/// sets (that duplication is the scheme's cost).
pub fn remote_neighbors(g: &CsrGraph, plan: &PartitionPlan) -> Vec<Vec<usize>> {
    let m = plan.num_workers();
    let mut remote = vec![Vec::new(); m];
    for i in 0..m {
        let mut seen = std::collections::BTreeSet::new();
        for &v in plan.members(i) {
            for &u in g.row(v) {
                if plan.owner(u) != i {
                    seen.insert(u);
                }
            }
        }
        remote[i] = seen.into_iter().collect();
    }
    remote
}

/// Index ranges for the mixed scheme: per-layer feature ranges for the
/// aggregation group and node ranges for the update group, both the
/// balanced floor split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MopPlan {
    pub num_workers: usize,
    pub num_nodes: usize,
    pub dims: Vec<usize>,
}

impl MopPlan {
    /// Feature-column range [p, q) of aggregation worker i at layer l.
    pub fn feature_range(&self, layer: usize, i: usize) -> (usize, usize) {
        balanced_range(self.dims[layer], self.num_workers, i)
    }

    /// Node-row range [p, q) of update worker i.
    pub fn node_range(&self, i: usize) -> (usize, usize) {
        balanced_range(self.num_nodes, self.num_workers, i)
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }
}

pub fn mop_plan(n: usize, dims: &[usize], m: usize) -> Result<MopPlan> {
    if m == 0 {
        return Err(Error::InvalidParam("need at least one worker".into()));
    }
    if dims.len() < 2 {
        return Err(Error::InvalidParam(
            "need dims for at least one layer".into(),
        ));
    }
    Ok(MopPlan {
        num_workers: m,
        num_nodes: n,
        dims: dims.to_vec(),
    })
}
