//! Browser demo bindings: three interactive views over the core library,
//! each returning a JSON payload the page renders onto canvases.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mixlab_core::graph::{gen_synthetic, CsrGraph, GraphSpec};
use mixlab_core::parallel::{
    mop_comm_volume, mop_flops, mop_memory, partition_bfs, partition_random, pp_comm_volume,
    pp_flops, pp_memory,
};
use mixlab_core::pipeline::{build_schedule, simulate, EngineSlot};
use mixlab_core::reorder::{bandwidth, min_stages, rcm_order, NodeOrdering};

use mixlab_core::{Error, Result};

fn parse_spec(spec_json: &str) -> Result<GraphSpec> {
    serde_json::from_str(spec_json).map_err(|e| Error::Format(format!("bad graph spec: {e}")))
}

fn build(spec_json: &str, seed: u32) -> Result<CsrGraph> {
    let spec = parse_spec(spec_json)?;
    gen_synthetic(&spec, seed as u64)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Generate a graph and compare its input ordering against the
/// bandwidth-reducing one: spy-plot edge positions plus the stage bounds.
#[wasm_bindgen]
pub fn reorder_demo(spec_json: &str, seed: u32) -> std::result::Result<String, JsError> {
    js(reorder_demo_impl(spec_json, seed))
}

fn reorder_demo_impl(spec_json: &str, seed: u32) -> Result<String> {
    #[derive(Serialize)]
    struct Payload {
        n: usize,
        nnz: usize,
        bandwidth_input: usize,
        bandwidth_rcm: usize,
        stages_input: Option<usize>,
        stages_rcm: Option<usize>,
        /// Edge endpoint positions (upper triangle) in the input order.
        edges_input: Vec<(u32, u32)>,
        /// Same edges in the reduced-bandwidth order.
        edges_rcm: Vec<(u32, u32)>,
    }

    let g = build(spec_json, seed)?;
    let n = g.num_nodes();
    if n > 2048 {
        return Err(Error::InvalidParam("demo caps graphs at 2048 nodes".into()));
    }
    let identity = NodeOrdering::identity(n);
    let ordering = rcm_order(&g)?;

    let edges_for = |o: &NodeOrdering| -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for u in 0..n {
            for &v in g.row(u) {
                if u <= v {
                    out.push((o.position_of(u) as u32, o.position_of(v) as u32));
                }
            }
        }
        out
    };
    let b_in = bandwidth(&g, &identity);
    let b_rcm = bandwidth(&g, &ordering);
    let payload = Payload {
        n,
        nnz: g.nnz(),
        bandwidth_input: b_in,
        bandwidth_rcm: b_rcm,
        stages_input: min_stages(n, b_in).ok().map(|s| s.stages),
        stages_rcm: min_stages(n, b_rcm).ok().map(|s| s.stages),
        edges_input: edges_for(&identity),
        edges_rcm: edges_for(&ordering),
    };
    to_json(&payload)
}

/// Simulate the two-engine pipeline at one batch count and return the
/// step-by-step timeline for both orderings.
#[wasm_bindgen]
pub fn pipeline_demo(
    spec_json: &str,
    seed: u32,
    s: u32,
    rounds: u32,
) -> std::result::Result<String, JsError> {
    js(pipeline_demo_impl(spec_json, seed, s, rounds))
}

fn pipeline_demo_impl(spec_json: &str, seed: u32, s: u32, rounds: u32) -> Result<String> {
    #[derive(Serialize)]
    struct Engine {
        /// batch index per step, -1 when idle (flattened round*s + batch)
        dense: Vec<i32>,
        sparse: Vec<i32>,
        sparse_idle: usize,
        steady_sparse_idle: usize,
        makespan: usize,
        bandwidth: usize,
        bound_stages: usize,
    }
    #[derive(Serialize)]
    struct Payload {
        n: usize,
        s: u32,
        rounds: u32,
        input: Engine,
        rcm: Engine,
    }

    let g = build(spec_json, seed)?;
    let n = g.num_nodes();
    let run = |ordering: &NodeOrdering| -> Result<Engine> {
        let schedule = build_schedule(&g, ordering, s as usize)?;
        let timeline = simulate(&schedule, rounds as usize, 1, 1)?;
        let flatten = |slot: &EngineSlot| -> i32 {
            match slot {
                EngineSlot::Idle => -1,
                EngineSlot::Busy(r, b) => (r * s as usize + b) as i32,
            }
        };
        let b = bandwidth(&g, ordering);
        Ok(Engine {
            dense: timeline.steps.iter().map(|r| flatten(&r.dense)).collect(),
            sparse: timeline.steps.iter().map(|r| flatten(&r.sparse)).collect(),
            sparse_idle: timeline.sparse_idle,
            steady_sparse_idle: timeline.steady_sparse_idle,
            makespan: timeline.makespan,
            bandwidth: b,
            bound_stages: min_stages(n, b).map(|x| x.stages).unwrap_or(0),
        })
    };
    let identity = NodeOrdering::identity(n);
    let ordering = rcm_order(&g)?;
    let payload = Payload {
        n,
        s,
        rounds,
        input: run(&identity)?,
        rcm: run(&ordering)?,
    };
    to_json(&payload)
}

/// Communication volume, peak memory, and balance ratio of the two
/// distribution schemes over a range of worker counts.
#[wasm_bindgen]
pub fn scaling_demo(
    spec_json: &str,
    seed: u32,
    dims_csv: &str,
    m_max: u32,
) -> std::result::Result<String, JsError> {
    js(scaling_demo_impl(spec_json, seed, dims_csv, m_max))
}

fn scaling_demo_impl(spec_json: &str, seed: u32, dims_csv: &str, m_max: u32) -> Result<String> {
    #[derive(Serialize)]
    struct SchemeCurve {
        comm_elems: Vec<f64>,
        max_memory_bytes: Vec<f64>,
        balance_ratio: Vec<f64>,
    }
    #[derive(Serialize)]
    struct Payload {
        n: usize,
        nnz: usize,
        dims: Vec<usize>,
        ms: Vec<u32>,
        pp_random: SchemeCurve,
        pp_bfs: SchemeCurve,
        mop: SchemeCurve,
    }

    let dims: Vec<usize> = dims_csv
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("bad dims: {e}")))?;
    if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidParam(
            "dims need at least two positive widths".into(),
        ));
    }
    let g = build(spec_json, seed)?;
    let n = g.num_nodes();
    let ms: Vec<u32> = (1..=m_max).filter(|&m| (m as usize) <= n).collect();

    let mut pp_random_curve = SchemeCurve {
        comm_elems: vec![],
        max_memory_bytes: vec![],
        balance_ratio: vec![],
    };
    let mut pp_bfs_curve = SchemeCurve {
        comm_elems: vec![],
        max_memory_bytes: vec![],
        balance_ratio: vec![],
    };
    let mut mop_curve = SchemeCurve {
        comm_elems: vec![],
        max_memory_bytes: vec![],
        balance_ratio: vec![],
    };
    for &m in &ms {
        let m = m as usize;
        for (curve, plan) in [
            (&mut pp_random_curve, partition_random(&g, m, seed as u64)),
            (&mut pp_bfs_curve, partition_bfs(&g, m)),
        ] {
            let plan = plan?;
            curve
                .comm_elems
                .push(pp_comm_volume(&g, &plan, &dims, 4).totals.elems as f64);
            curve
                .max_memory_bytes
                .push(pp_memory(&g, &plan, &dims, 4).max_bytes as f64);
            curve.balance_ratio.push(pp_flops(&g, &plan, &dims).ratio);
        }
        mop_curve
            .comm_elems
            .push(mop_comm_volume(n, &dims, m, 4, false).totals.elems as f64);
        mop_curve
            .max_memory_bytes
            .push(mop_memory(n, &dims, m, 4).max_bytes as f64);
        mop_curve
            .balance_ratio
            .push(mop_flops(&g, &dims, m).aggregation.ratio);
    }
    let payload = Payload {
        n,
        nnz: g.nnz(),
        dims,
        ms,
        pp_random: pp_random_curve,
        pp_bfs: pp_bfs_curve,
        mop: mop_curve,
    };
    to_json(&payload)
}
