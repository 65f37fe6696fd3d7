//! Command implementations. Each returns the process exit code (0 success,
//! 3 equivalence/property failure); validation problems surface as errors.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiment::{ExperimentSpec, Scheme};
use mixlab_core::costmodel::{aggregation_cycles, fused_speedup_with_stats, AccelConfig};
use mixlab_core::gcn::{train, GcnModel, Precision, TrainConfig, TrainResult};
use mixlab_core::graph::{gen_synthetic, Dataset, GraphSpec};
use mixlab_core::kernels::{make_dropout_mask, spmm, sspmm, Real};
use mixlab_core::parallel::{
    mop_comm_volume, mop_execute, mop_flops, mop_memory, mop_plan, partition_bfs, partition_random,
    pp_comm_volume, pp_execute, pp_flops, pp_memory,
};
use mixlab_core::pipeline::{build_schedule, simulate, sufficiency_holds, verify_stage_bound};
use mixlab_core::reorder::{bandwidth, min_stages, rcm_order, NodeOrdering};
use mixlab_core::reports::{BalanceReport, CommReport, MemoryReport};
use mixlab_core::{Error, Result};

const TRACE_TOLERANCE_F64: f64 = 1e-10;
const TRACE_TOLERANCE_F32: f64 = 1e-3;

pub fn ingest(input: &Path, symmetric: bool, output: &Path) -> Result<i32> {
    let (graph, stats) = mixlab_core::io::load_edge_list(input, symmetric)?;
    mixlab_core::io::save_csr(output, &graph)?;
    let max_degree = (0..graph.num_nodes())
        .map(|v| graph.row(v).len())
        .max()
        .unwrap_or(0);
    let edges = if graph.is_symmetric() {
        format!("{}(undirected)", (graph.nnz() + graph.self_loops()) / 2)
    } else {
        format!("{}(directed)", graph.nnz())
    };
    println!(
        "nodes={} edges={} nnz={} max_degree={} self_loops={} duplicate_lines={}",
        graph.num_nodes(),
        edges,
        graph.nnz(),
        max_degree,
        stats.self_loops,
        stats.duplicates,
    );
    println!("wrote {}", output.display());
    Ok(0)
}

pub fn gen(spec_json: &str, seed: u64, output: &Path) -> Result<i32> {
    let spec: GraphSpec = serde_json::from_str(spec_json)
        .map_err(|e| Error::Format(format!("bad generator spec: {e}")))?;
    let graph = gen_synthetic(&spec, seed)?;
    mixlab_core::io::save_csr(output, &graph)?;
    println!(
        "nodes={} nnz={} symmetric={} wrote {}",
        graph.num_nodes(),
        graph.nnz(),
        graph.is_symmetric(),
        output.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct AnalysisCell {
    comm: CommReport,
    balance: BalanceReport,
    balance_update: Option<BalanceReport>,
    memory: MemoryReport,
    /// Weight-gradient allreduce size per worker per iteration, in
    /// elements. Identical for every scheme and excluded from the feature
    /// communication totals above.
    weight_sync_elems: u64,
}

pub fn analyze(spec: ExperimentSpec, colocated: bool) -> Result<i32> {
    let source = spec
        .graph
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("analyze needs --graph or --gen".into()))?;
    let graph = source.load(spec.seed)?;
    let n = graph.num_nodes();
    let width = spec.precision.bytes();
    let weight_sync_elems: u64 = spec.dims.windows(2).map(|w| (w[0] * w[1]) as u64).sum();
    let out_dir = spec.output.clone();
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut csv = String::from(
        "scheme,m,comm_total_elems,comm_total_bytes,mem_total_bytes,mem_max_bytes,balance_ratio,balance_ratio_update,weight_sync_elems,norm_comm,norm_mem\n",
    );
    let mut layer_csv = format!("{}\n", CommReport::csv_header());
    // normalization baseline: the single-worker partition-parallel run
    let base_plan = partition_random(&graph, 1, spec.seed)?;
    let base_comm = pp_comm_volume(&graph, &base_plan, &spec.dims, width)
        .totals
        .bytes;
    let base_mem = pp_memory(&graph, &base_plan, &spec.dims, width).total_bytes;

    for &scheme in &spec.schemes {
        if scheme == Scheme::Reference {
            continue; // nothing distributed to report
        }
        for &m in &spec.m {
            let cell = match scheme {
                Scheme::PpRandom | Scheme::PpBfs => {
                    let plan = match scheme {
                        Scheme::PpRandom => partition_random(&graph, m, spec.seed)?,
                        _ => partition_bfs(&graph, m)?,
                    };
                    AnalysisCell {
                        comm: pp_comm_volume(&graph, &plan, &spec.dims, width),
                        balance: pp_flops(&graph, &plan, &spec.dims),
                        balance_update: None,
                        memory: pp_memory(&graph, &plan, &spec.dims, width),
                        weight_sync_elems,
                    }
                }
                Scheme::Mop => {
                    let b = mop_flops(&graph, &spec.dims, m);
                    AnalysisCell {
                        comm: mop_comm_volume(n, &spec.dims, m, width, colocated),
                        balance: b.aggregation,
                        balance_update: Some(b.update),
                        memory: mop_memory(n, &spec.dims, m, width),
                        weight_sync_elems,
                    }
                }
                Scheme::Reference => unreachable!(),
            };
            let norm = |v: u64, base: u64| -> String {
                if base == 0 {
                    String::new()
                } else {
                    format!("{:.6}", v as f64 / base as f64)
                }
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{:.6},{},{},{},{}\n",
                scheme.name(),
                m,
                cell.comm.totals.elems,
                cell.comm.totals.bytes,
                cell.memory.total_bytes,
                cell.memory.max_bytes,
                cell.balance.ratio,
                cell.balance_update
                    .as_ref()
                    .map(|b| format!("{:.6}", b.ratio))
                    .unwrap_or_default(),
                cell.weight_sync_elems,
                norm(cell.comm.totals.bytes, base_comm),
                norm(cell.memory.total_bytes, base_mem),
            ));
            layer_csv.push_str(&cell.comm.csv_rows());
            if let Some(dir) = &out_dir {
                let path = dir.join(format!("{}_m{}.json", scheme.name(), m));
                let json = serde_json::to_string_pretty(&cell)
                    .map_err(|e| Error::Format(format!("encode: {e}")))?;
                std::fs::write(path, json)?;
            }
        }
    }
    print!("{csv}");
    if let Some(dir) = &out_dir {
        std::fs::write(dir.join("analyze.csv"), &csv)?;
        std::fs::write(dir.join("comm_layers.csv"), &layer_csv)?;
        println!("wrote {}", dir.display());
    }
    Ok(0)
}

pub fn trainsim(spec: ExperimentSpec, features: Option<&Path>) -> Result<i32> {
    match spec.precision {
        Precision::F64 => trainsim_typed::<f64>(spec, features, TRACE_TOLERANCE_F64),
        Precision::F32 => trainsim_typed::<f32>(spec, features, TRACE_TOLERANCE_F32),
    }
}

fn trainsim_typed<T: Real>(
    spec: ExperimentSpec,
    features: Option<&Path>,
    tolerance: f64,
) -> Result<i32> {
    let source = spec
        .graph
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("trainsim needs --graph or --gen".into()))?;
    let graph = source.load(spec.seed)?;
    let n = graph.num_nodes();
    let a_hat = graph.normalize()?;
    let dataset = match features {
        // features from file; labels stay seed-derived (the feature file
        // format carries no labels)
        Some(path) => {
            let x = mixlab_core::io::load_features(path)?;
            if x.cols() != spec.dims[0] {
                return Err(Error::DimMismatch(format!(
                    "feature file has {} columns, dims[0] = {}",
                    x.cols(),
                    spec.dims[0]
                )));
            }
            let synthetic =
                Dataset::synthetic(graph.clone(), 1, *spec.dims.last().unwrap(), spec.seed)?;
            Dataset::new(graph, x, synthetic.labels, *spec.dims.last().unwrap())?
        }
        None => Dataset::synthetic(graph, spec.dims[0], *spec.dims.last().unwrap(), spec.seed)?,
    };
    let model: GcnModel<T> = GcnModel::init(&spec.dims, spec.dropout, spec.seed)?;
    let config = TrainConfig {
        iterations: spec.iterations,
        learning_rate: spec.learning_rate,
        precision: spec.precision,
    };

    let reference = train(&model, &a_hat, &dataset, &config)?;
    if let Some(dir) = &spec.output {
        std::fs::create_dir_all(dir)?;
        mixlab_core::io::save_trace(&dir.join("reference.json"), &reference.trace)?;
    }
    println!(
        "reference: final loss {:.6}",
        reference.trace.last().unwrap()
    );

    let mut worst: f64 = 0.0;
    for &scheme in &spec.schemes {
        if scheme == Scheme::Reference {
            continue;
        }
        for &m in &spec.m {
            let result: TrainResult<T> = match scheme {
                Scheme::PpRandom => {
                    let plan = partition_random(&a_hat, m, spec.seed)?;
                    pp_execute(&a_hat, &plan, &model, &dataset, &config)?.0
                }
                Scheme::PpBfs => {
                    let plan = partition_bfs(&a_hat, m)?;
                    pp_execute(&a_hat, &plan, &model, &dataset, &config)?.0
                }
                Scheme::Mop => {
                    let plan = mop_plan(n, &spec.dims, m)?;
                    let (result, comm) = mop_execute(&a_hat, &plan, &model, &dataset, &config)?;
                    println!(
                        "mop m={m}: all-to-all {} elements/iteration",
                        comm.totals.elems
                    );
                    result
                }
                Scheme::Reference => unreachable!(),
            };
            let dev = reference
                .trace
                .iter()
                .zip(&result.trace)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(dev);
            println!("{} m={}: max trace deviation {:.3e}", scheme.name(), m, dev);
            if let Some(dir) = &spec.output {
                let path = dir.join(format!("{}_m{}.json", scheme.name(), m));
                mixlab_core::io::save_trace(&path, &result.trace)?;
            }
        }
    }
    if worst > tolerance {
        eprintln!("equivalence FAILED: worst deviation {worst:.3e} > {tolerance:.0e}");
        return Ok(3);
    }
    println!("equivalence ok: worst deviation {worst:.3e} <= {tolerance:.0e}");
    Ok(0)
}

pub fn reorder(graph_path: &Path, output: Option<&Path>, json: Option<&Path>) -> Result<i32> {
    let graph = mixlab_core::io::load_csr(graph_path)?;
    let n = graph.num_nodes();
    let identity = NodeOrdering::identity(n);
    let ordering = rcm_order(&graph)?;
    let before = bandwidth(&graph, &identity);
    let after = bandwidth(&graph, &ordering);
    let bound = min_stages(n, after)?;
    println!(
        "nodes={n} bandwidth: input={before} reordered={after} min_stages={} fully_pipelinable={}",
        bound.stages, bound.fully_pipelinable
    );
    if let Some(path) = output {
        mixlab_core::io::save_ordering(path, ordering.perm())?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = json {
        #[derive(Serialize)]
        struct Report {
            nodes: usize,
            bandwidth_input: usize,
            bandwidth_reordered: usize,
            min_stages: usize,
            fully_pipelinable: bool,
        }
        let report = Report {
            nodes: n,
            bandwidth_input: before,
            bandwidth_reordered: after,
            min_stages: bound.stages,
            fully_pipelinable: bound.fully_pipelinable,
        };
        std::fs::write(
            path,
            serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?,
        )?;
    }
    Ok(0)
}

pub struct PipelineOpts {
    pub graph: PathBuf,
    pub order: Option<PathBuf>,
    pub identity: bool,
    pub stages: Option<usize>,
    pub rounds: usize,
    pub dense_latency: usize,
    pub sparse_latency: usize,
    pub timeline_csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

pub fn pipeline(opts: PipelineOpts) -> Result<i32> {
    let graph = mixlab_core::io::load_csr(&opts.graph)?;
    let n = graph.num_nodes();
    let ordering = if let Some(path) = &opts.order {
        NodeOrdering::from_perm(mixlab_core::io::load_ordering(path)?)?
    } else if opts.identity {
        NodeOrdering::identity(n)
    } else {
        rcm_order(&graph)?
    };
    let b = bandwidth(&graph, &ordering);

    match opts.stages {
        Some(s) => {
            let schedule = build_schedule(&graph, &ordering, s)?;
            let timeline = simulate(
                &schedule,
                opts.rounds,
                opts.dense_latency,
                opts.sparse_latency,
            )?;
            println!(
                "n={n} b={b} s={s} rounds={}: makespan={} dense_idle={} sparse_idle={} steady_sparse_idle={}",
                opts.rounds,
                timeline.makespan,
                timeline.dense_idle,
                timeline.sparse_idle,
                timeline.steady_sparse_idle
            );
            if let Some(path) = &opts.timeline_csv {
                std::fs::write(path, timeline.to_csv())?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = &opts.json {
                #[derive(Serialize)]
                struct Summary {
                    n: usize,
                    bandwidth: usize,
                    s: usize,
                    rounds: usize,
                    makespan: usize,
                    dense_idle: usize,
                    sparse_idle: usize,
                    steady_sparse_idle: usize,
                }
                let summary = Summary {
                    n,
                    bandwidth: b,
                    s,
                    rounds: opts.rounds,
                    makespan: timeline.makespan,
                    dense_idle: timeline.dense_idle,
                    sparse_idle: timeline.sparse_idle,
                    steady_sparse_idle: timeline.steady_sparse_idle,
                };
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&summary)
                        .map_err(|e| Error::Format(e.to_string()))?,
                )?;
            }
            Ok(0)
        }
        None => {
            let rows = verify_stage_bound(&graph, &ordering, opts.rounds)?;
            println!("s,steady_sparse_idle,bound_stages,bound_satisfied");
            for row in &rows {
                println!(
                    "{},{},{},{}",
                    row.s, row.steady_sparse_idle, row.bound_stages, row.bound_satisfied
                );
            }
            if let Some(path) = &opts.json {
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&rows)
                        .map_err(|e| Error::Format(e.to_string()))?,
                )?;
            }
            if !sufficiency_holds(&rows) {
                eprintln!("stage bound violated: satisfied bound with nonzero steady idle");
                return Ok(3);
            }
            println!(
                "stage-bound sufficiency holds (bound = {})",
                rows[0].bound_stages
            );
            Ok(0)
        }
    }
}

pub fn kernelbench(graph_path: &Path, cols: usize, density: f64, seed: u64) -> Result<i32> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParam(format!(
            "density {density} outside [0, 1]"
        )));
    }
    let graph = mixlab_core::io::load_csr(graph_path)?;
    let a_hat = if graph.is_weighted() {
        graph
    } else {
        graph.normalize()?
    };
    let n = a_hat.num_nodes();
    let mut h = mixlab_core::kernels::FeatureMatrix::<f64>::zeros(n, cols);
    for i in 0..n {
        for j in 0..cols {
            h.set(
                i,
                j,
                mixlab_core::prng::uniform(seed, 0xBE, &[i as u64, j as u64]),
            );
        }
    }
    let (_, full) = spmm(&a_hat, &h)?;
    let mask = make_dropout_mask(n, cols, 1.0 - density, seed, 1)?;
    let (_, masked) = sspmm(&a_hat, &h, &mask)?;

    #[derive(Serialize)]
    struct Bench {
        nodes: usize,
        nnz: usize,
        cols: usize,
        density: f64,
        full: mixlab_core::kernels::KernelStats,
        masked: mixlab_core::kernels::KernelStats,
        flop_ratio: f64,
    }
    let bench = Bench {
        nodes: n,
        nnz: a_hat.nnz(),
        cols,
        density,
        full,
        masked,
        flop_ratio: masked.flops as f64 / full.flops.max(1) as f64,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&bench).map_err(|e| Error::Format(e.to_string()))?
    );
    Ok(0)
}

pub fn costmodel(
    graph_path: &Path,
    config: Option<&Path>,
    cols: usize,
    density: f64,
) -> Result<i32> {
    let cfg: AccelConfig = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad config: {e}")))?
        }
        None => AccelConfig::default(),
    };
    cfg.validate()?;
    let graph = mixlab_core::io::load_csr(graph_path)?;
    let a_hat = if graph.is_weighted() {
        graph
    } else {
        graph.normalize()?
    };
    let (speedup, full, masked) = fused_speedup_with_stats(&a_hat, cols, density, &cfg)?;
    let full_est = aggregation_cycles(&full, &cfg, false)?;
    let masked_est = aggregation_cycles(&masked, &cfg, false)?;

    #[derive(Serialize)]
    struct Estimate {
        config: AccelConfig,
        density: f64,
        full: mixlab_core::costmodel::CycleEstimate,
        masked: mixlab_core::costmodel::CycleEstimate,
        fused_speedup: f64,
    }
    let estimate = Estimate {
        config: cfg,
        density,
        full: full_est,
        masked: masked_est,
        fused_speedup: speedup,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&estimate).map_err(|e| Error::Format(e.to_string()))?
    );
    Ok(0)
}
