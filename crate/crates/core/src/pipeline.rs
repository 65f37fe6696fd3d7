//! Discrete-step simulation of the two-engine (sparse aggregation / dense
//! update) fine-grain pipeline. Nodes are cut into contiguous position
//! batches; the sparse engine cannot start a batch until the dense engine
//! has produced every batch it depends on, and the layers wrap around so the
//! sparse output of one round feeds the dense work of the next.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::reorder::{bandwidth, min_stages, NodeOrdering};

/// Contiguous batches over an ordering, with true dependency depths.
#[derive(Debug, Clone)]
pub struct BatchSchedule {
    pub s: usize,
    pub n: usize,
    /// position -> batch index; batch k covers [floor(n*k/s), floor(n*(k+1)/s)).
    pub batch_of: Vec<usize>,
    /// Highest-index batch containing any neighbor of batch k's nodes
    /// (at least k itself: a node always needs its own features).
    pub dep: Vec<usize>,
}

use crate::balanced_range;

/// Cut the ordering into `s` batches and compute each batch's dependency
/// depth from the actual adjacency (not from the bandwidth bound).
pub fn build_schedule(g: &CsrGraph, ordering: &NodeOrdering, s: usize) -> Result<BatchSchedule> {
    let n = g.num_nodes();
    if ordering.len() != n {
        return Err(Error::DimMismatch(format!(
            "ordering length {} != n = {n}",
            ordering.len()
        )));
    }
    if s == 0 || s > n {
        return Err(Error::InvalidParam(format!(
            "stage count {s} outside [1, n = {n}]"
        )));
    }
    let mut batch_of = vec![0usize; n];
    for k in 0..s {
        let (lo, hi) = balanced_range(n, s, k);
        for item in batch_of.iter_mut().take(hi).skip(lo) {
            *item = k;
        }
    }
    let mut dep: Vec<usize> = (0..s).collect();
    for p in 0..n {
        let v = ordering.node_at(p);
        let k = batch_of[p];
        for &u in g.row(v) {
            let q = ordering.position_of(u);
            dep[k] = dep[k].max(batch_of[q]);
        }
    }
    Ok(BatchSchedule {
        s,
        n,
        batch_of,
        dep,
    })
}

/// What one engine did at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EngineSlot {
    Idle,
    /// (round, batch)
    Busy(usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub dense: EngineSlot,
    pub sparse: EngineSlot,
}

#[derive(Debug, Clone)]
pub struct PipelineTimeline {
    pub steps: Vec<StepRecord>,
    pub makespan: usize,
    pub dense_idle: usize,
    pub sparse_idle: usize,
    /// Sparse idle from the second round onward, once the pipeline has
    /// settled. Zero by convention for s = 1 (fully serial alternation).
    pub steady_sparse_idle: usize,
    pub rounds: usize,
}

impl PipelineTimeline {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,dense,sparse\n");
        let fmt = |slot: &EngineSlot| match slot {
            EngineSlot::Idle => "idle".to_string(),
            EngineSlot::Busy(r, b) => format!("r{r}b{b}"),
        };
        for rec in &self.steps {
            out.push_str(&format!(
                "{},{},{}\n",
                rec.step,
                fmt(&rec.dense),
                fmt(&rec.sparse)
            ));
        }
        out
    }
}

/// Run the two engines for `rounds` layer boundaries. Each engine processes
/// its batches in order, one batch per `latency` steps. Dense round r batch j
/// requires sparse round r-1 batch j (the producer/consumer wraparound);
/// sparse round r batch k requires dense round r batch dep[k].
pub fn simulate(
    schedule: &BatchSchedule,
    rounds: usize,
    dense_latency: usize,
    sparse_latency: usize,
) -> Result<PipelineTimeline> {
    if rounds == 0 {
        return Err(Error::InvalidParam("rounds must be >= 1".into()));
    }
    if dense_latency == 0 || sparse_latency == 0 {
        return Err(Error::InvalidParam("latencies must be >= 1".into()));
    }
    let s = schedule.s;
    let mut dense_done = vec![vec![0usize; s]; rounds]; // completion step + 1
    let mut sparse_done = vec![vec![0usize; s]; rounds];
    let mut dense_start = vec![vec![0usize; s]; rounds];
    let mut sparse_start = vec![vec![0usize; s]; rounds];

    let mut dense_free = 0usize;
    let mut sparse_free = 0usize;
    for r in 0..rounds {
        for j in 0..s {
            let ready = if r == 0 { 0 } else { sparse_done[r - 1][j] };
            let start = dense_free.max(ready);
            dense_start[r][j] = start;
            dense_done[r][j] = start + dense_latency;
            dense_free = dense_done[r][j];
        }
        for k in 0..s {
            let ready = dense_done[r][schedule.dep[k]];
            let start = sparse_free.max(ready);
            sparse_start[r][k] = start;
            sparse_done[r][k] = start + sparse_latency;
            sparse_free = sparse_done[r][k];
        }
    }

    let makespan = sparse_done[rounds - 1][s - 1].max(dense_done[rounds - 1][s - 1]);
    let mut steps: Vec<StepRecord> = (0..makespan)
        .map(|step| StepRecord {
            step,
            dense: EngineSlot::Idle,
            sparse: EngineSlot::Idle,
        })
        .collect();
    for r in 0..rounds {
        for j in 0..s {
            for t in dense_start[r][j]..dense_done[r][j] {
                steps[t].dense = EngineSlot::Busy(r, j);
            }
            for t in sparse_start[r][j]..sparse_done[r][j] {
                steps[t].sparse = EngineSlot::Busy(r, j);
            }
        }
    }

    // Idle = gaps inside each engine's active span.
    let dense_span = dense_done[rounds - 1][s - 1] - dense_start[0][0];
    let sparse_span = sparse_done[rounds - 1][s - 1] - sparse_start[0][0];
    let dense_idle = dense_span - rounds * s * dense_latency;
    let sparse_idle = sparse_span - rounds * s * sparse_latency;

    // Steady state: gaps from the first batch of round 1 to the end.
    let steady_sparse_idle = if s == 1 || rounds < 2 {
        0
    } else {
        let span = sparse_done[rounds - 1][s - 1] - sparse_start[1][0];
        span - (rounds - 1) * s * sparse_latency
    };

    Ok(PipelineTimeline {
        steps,
        makespan,
        dense_idle,
        sparse_idle,
        steady_sparse_idle,
        rounds,
    })
}

/// One row of the stage-bound scan.
#[derive(Debug, Clone, Serialize)]
pub struct StageRow {
    pub s: usize,
    pub steady_sparse_idle: usize,
    pub bound_stages: usize,
    pub bound_satisfied: bool,
}

/// Scan s = 2..=min(n, 64): simulate and compare against the analytic stage
/// bound computed from the ordering's actual bandwidth.
pub fn verify_stage_bound(
    g: &CsrGraph,
    ordering: &NodeOrdering,
    rounds: usize,
) -> Result<Vec<StageRow>> {
    let n = g.num_nodes();
    let b = bandwidth(g, ordering);
    let bound = min_stages(n, b)?;
    let mut rows = Vec::new();
    for s in 2..=n.min(64) {
        let schedule = build_schedule(g, ordering, s)?;
        let timeline = simulate(&schedule, rounds, 1, 1)?;
        rows.push(StageRow {
            s,
            steady_sparse_idle: timeline.steady_sparse_idle,
            bound_stages: bound.stages,
            bound_satisfied: s >= bound.stages,
        });
    }
    Ok(rows)
}

/// The sufficiency direction of the stage bound: wherever the bound is
/// satisfied, steady-state sparse idle must be zero. (The converse is not
/// asserted: true dependencies can beat the bandwidth bound.)
pub fn sufficiency_holds(rows: &[StageRow]) -> bool {
    rows.iter()
        .all(|r| !r.bound_satisfied || r.steady_sparse_idle == 0)
}
