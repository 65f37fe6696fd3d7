//! Golden-trace regression: a recorded training run on a small synthetic
//! graph must reproduce bit-for-bit (hex-float encoded file), and its loss
//! must descend monotonically once past the first few iterations.
//!
//! Regenerate with UPDATE_GOLDEN=1 after an intentional numeric change.

use mixlab_core::gcn::{train, GcnModel, Precision, TrainConfig};
use mixlab_core::graph::{gen_rmat, Dataset};
use mixlab_core::io::{load_trace, save_trace};
use std::path::Path;

fn golden_run() -> Vec<f64> {
    let g = gen_rmat(32, 128, [0.45, 0.22, 0.22, 0.11], 7).unwrap();
    let a_hat = g.normalize().unwrap();
    let ds = Dataset::synthetic(g, 8, 4, 7).unwrap();
    let model = GcnModel::<f64>::init(&[8, 16, 4], 0.0, 7).unwrap();
    let cfg = TrainConfig {
        iterations: 50,
        learning_rate: 0.5,
        precision: Precision::F64,
    };
    train(&model, &a_hat, &ds, &cfg).unwrap().trace
}

#[test]
fn rmat_toy_trace_matches_golden_file() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/rmat32_trace.json");
    let trace = golden_run();
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        save_trace(&path, &trace).unwrap();
    }
    let golden = load_trace(&path).expect("golden file present (regenerate with UPDATE_GOLDEN=1)");
    assert_eq!(golden.len(), trace.len());
    for (i, (g, t)) in golden.iter().zip(&trace).enumerate() {
        assert_eq!(g.to_bits(), t.to_bits(), "iteration {i}: {g} vs {t}");
    }
}

#[test]
fn rmat_toy_loss_descends_after_warmup() {
    let trace = golden_run();
    assert_eq!(trace.len(), 50);
    for i in 5..trace.len() - 1 {
        assert!(
            trace[i + 1] <= trace[i],
            "loss rose at iteration {}: {} -> {}",
            i,
            trace[i],
            trace[i + 1]
        );
    }
}
