//! A desk-scale laboratory for studying how full-graph GCN training
//! parallelizes: numerically exact simulators for partition parallelism and
//! mixed feature/node parallelism, a fused masked sparse kernel with exact
//! work accounting, bandwidth-reducing node reordering, a two-engine
//! pipeline simulator, and a roofline cost model.

pub mod costmodel;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod parallel;
pub mod pipeline;
pub mod prng;
pub mod reorder;
pub mod reports;

pub use error::{Error, Result};

/// The balanced contiguous split used for every index-range partition in
/// this crate: part i of `parts` covers [total*i/parts, total*(i+1)/parts).
pub fn balanced_range(total: usize, parts: usize, i: usize) -> (usize, usize) {
    (total * i / parts, total * (i + 1) / parts)
}
