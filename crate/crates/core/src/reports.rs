//! Analytics report types shared by the CLI and both scheme simulators,
//! with JSON (serde) and CSV emission.

use serde::{Deserialize, Serialize};

/// Per-layer communication volume in elements and bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerVolume {
    pub fwd_elems: u64,
    pub bwd_elems: u64,
    pub fwd_bytes: u64,
    pub bwd_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Totals {
    pub elems: u64,
    pub bytes: u64,
}

/// Feature communication volume of one (scheme, m) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommReport {
    pub scheme: String,
    pub m: usize,
    pub per_layer: Vec<LayerVolume>,
    pub totals: Totals,
    /// Elements received per worker, forward and backward combined.
    pub per_worker: Vec<u64>,
}

impl CommReport {
    pub fn new(scheme: &str, m: usize, per_layer: Vec<LayerVolume>, per_worker: Vec<u64>) -> Self {
        let totals = Totals {
            elems: per_layer.iter().map(|l| l.fwd_elems + l.bwd_elems).sum(),
            bytes: per_layer.iter().map(|l| l.fwd_bytes + l.bwd_bytes).sum(),
        };
        Self {
            scheme: scheme.to_string(),
            m,
            per_layer,
            totals,
            per_worker,
        }
    }

    pub fn csv_header() -> &'static str {
        "scheme,m,layer,fwd_elems,bwd_elems,fwd_bytes,bwd_bytes"
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (l, v) in self.per_layer.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.scheme, self.m, l, v.fwd_elems, v.bwd_elems, v.fwd_bytes, v.bwd_bytes
            ));
        }
        out
    }
}

/// Per-worker FLOP loads and the max/mean balance ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub scheme: String,
    pub m: usize,
    pub per_worker_flops: Vec<u64>,
    pub ratio: f64,
}

impl BalanceReport {
    pub fn new(scheme: &str, m: usize, per_worker_flops: Vec<u64>) -> Self {
        let ratio = balance_ratio(&per_worker_flops);
        Self {
            scheme: scheme.to_string(),
            m,
            per_worker_flops,
            ratio,
        }
    }
}

/// max / mean of a load vector; 1.0 for empty or all-zero loads.
pub fn balance_ratio(loads: &[u64]) -> f64 {
    if loads.is_empty() {
        return 1.0;
    }
    let total: u64 = loads.iter().sum();
    if total == 0 {
        return 1.0;
    }
    let max = *loads.iter().max().expect("non-empty") as f64;
    let mean = total as f64 / loads.len() as f64;
    max / mean
}

/// Separate balance views for the two accelerator groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MopBalance {
    pub aggregation: BalanceReport,
    pub update: BalanceReport,
}

/// Feature memory per worker across all layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub scheme: String,
    pub m: usize,
    pub per_worker_bytes: Vec<u64>,
    pub max_bytes: u64,
    pub total_bytes: u64,
}

impl MemoryReport {
    pub fn new(scheme: &str, m: usize, per_worker_bytes: Vec<u64>) -> Self {
        let max_bytes = per_worker_bytes.iter().copied().max().unwrap_or(0);
        let total_bytes = per_worker_bytes.iter().sum();
        Self {
            scheme: scheme.to_string(),
            m,
            per_worker_bytes,
            max_bytes,
            total_bytes,
        }
    }
}
