//! mixlab: generate and inspect graphs, run the training-scheme simulators,
//! reorder nodes, schedule the two-engine pipeline, and estimate kernel
//! cost. Exit codes: 0 ok, 2 validation error, 3 equivalence/property
//! failure.

mod commands;
mod experiment;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use experiment::{ExperimentSpec, GraphSource, Scheme};
use mixlab_core::gcn::Precision;
use mixlab_core::graph::GraphSpec;

#[derive(Parser)]
#[command(name = "mixlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a text edge list, report stats, and store the binary CSR.
    Ingest {
        /// Edge-list file: one "u<TAB>v" pair per line, 0-based ids
        #[arg(long)]
        input: PathBuf,
        /// Keep edges directed instead of closing them under reversal
        #[arg(long, default_value_t = false)]
        directed: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a synthetic graph and store the binary CSR.
    Gen {
        /// Generator spec as JSON, e.g. '{"kind":"path","n":8}' or
        /// '{"kind":"rmat","n":1024,"edges":8192}'
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Communication/balance/memory analytics per scheme and worker count.
    Analyze {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Discount the 1/m all-to-all share that stays on-device when the
        /// aggregation and update groups share hardware
        #[arg(long, default_value_t = false)]
        colocated: bool,
    },
    /// Train with the requested schemes and compare against the reference.
    Trainsim {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Feature matrix file (MXF1); labels stay seed-derived
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Compute the bandwidth-reducing ordering and the stage bound.
    Reorder {
        #[arg(long)]
        graph: PathBuf,
        /// Write the ordering (one node id per line)
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write a JSON report
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Simulate the two-engine pipeline for one s or scan all s.
    Pipeline {
        #[arg(long)]
        graph: PathBuf,
        /// Ordering file; defaults to the reduced-bandwidth ordering
        #[arg(long)]
        order: Option<PathBuf>,
        /// Use the identity ordering instead
        #[arg(long, default_value_t = false)]
        identity: bool,
        /// Batch count; omit to scan 2..=min(n, 64)
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long, default_value_t = 4)]
        rounds: usize,
        #[arg(long, default_value_t = 1)]
        dense_latency: usize,
        #[arg(long, default_value_t = 1)]
        sparse_latency: usize,
        /// Write the per-step timeline as CSV (single-s mode)
        #[arg(long)]
        timeline_csv: Option<PathBuf>,
        /// Write the summary/scan as JSON
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the sparse kernels on a graph and print their work accounting.
    Kernelbench {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 32)]
        cols: usize,
        /// Fraction of outputs kept by the mask
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Roofline cycle estimate for the aggregation kernel.
    Costmodel {
        #[arg(long)]
        graph: PathBuf,
        /// Accelerator config JSON; defaults are built in
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        cols: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Full experiment spec as JSON (flags below override it)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Graph file produced by ingest/gen
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Inline generator spec as JSON
    #[arg(long)]
    gen: Option<String>,
    /// Layer widths, comma separated (input,hidden...,classes)
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Schemes: reference, pp-random, pp-bfs, mop
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Worker counts, comma separated
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for JSON/CSV outputs
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(self) -> mixlab_core::Result<ExperimentSpec> {
        let mut spec = match &self.spec {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(path) = self.graph {
            spec.graph = Some(GraphSource::File { file: path });
        }
        if let Some(json) = self.gen {
            let g: GraphSpec = serde_json::from_str(&json)
                .map_err(|e| mixlab_core::Error::Format(format!("bad generator spec: {e}")))?;
            spec.graph = Some(GraphSource::Generate(g));
        }
        if let Some(d) = self.dims {
            spec.dims = d;
        }
        if let Some(s) = self.schemes {
            spec.schemes = s;
        }
        if let Some(m) = self.m {
            spec.m = m;
        }
        if let Some(p) = self.precision {
            spec.precision = p;
        }
        if let Some(i) = self.iterations {
            spec.iterations = i;
        }
        if let Some(lr) = self.lr {
            spec.learning_rate = lr;
        }
        if let Some(d) = self.dropout {
            spec.dropout = d;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(dir) = self.out_dir {
            spec.output = Some(dir);
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest {
            input,
            directed,
            output,
        } => commands::ingest(&input, !directed, &output),
        Command::Gen { spec, seed, output } => commands::gen(&spec, seed, &output),
        Command::Analyze { args, colocated } => args
            .resolve()
            .and_then(|spec| commands::analyze(spec, colocated)),
        Command::Trainsim { args, features } => args
            .resolve()
            .and_then(|spec| commands::trainsim(spec, features.as_deref())),
        Command::Reorder {
            graph,
            output,
            json,
        } => commands::reorder(&graph, output.as_deref(), json.as_deref()),
        Command::Pipeline {
            graph,
            order,
            identity,
            stages,
            rounds,
            dense_latency,
            sparse_latency,
            timeline_csv,
            json,
        } => commands::pipeline(commands::PipelineOpts {
            graph,
            order,
            identity,
            stages,
            rounds,
            dense_latency,
            sparse_latency,
            timeline_csv,
            json,
        }),
        Command::Kernelbench {
            graph,
            cols,
            density,
            seed,
        } => commands::kernelbench(&graph, cols, density, seed),
        Command::Costmodel {
            graph,
            config,
            cols,
            density,
        } => commands::costmodel(&graph, config.as_deref(), cols, density),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
