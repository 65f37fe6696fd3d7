//! Identical-machines makespan: an exhaustive oracle for small instances
//! and the longest-processing-time greedy heuristic.

use crate::error::{Error, Result};

const BRUTE_FORCE_CAP: usize = 16;

/// Exact minimum makespan by exhaustive assignment with symmetry and bound
/// pruning. Capped at 16 costs.
pub fn brute_force_makespan(costs: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParam("need at least one machine".into()));
    }
    if costs.len() > BRUTE_FORCE_CAP {
        return Err(Error::InvalidParam(format!(
            "brute force capped at {BRUTE_FORCE_CAP} costs, got {}",
            costs.len()
        )));
    }
    if costs.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(Error::InvalidParam(
            "costs must be finite and non-negative".into(),
        ));
    }
    if costs.is_empty() {
        return Ok(0.0);
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut loads = vec![0.0f64; m];
    let mut best = f64::INFINITY;
    assign(&sorted, 0, &mut loads, &mut best);
    Ok(best)
}

fn assign(costs: &[f64], i: usize, loads: &mut [f64], best: &mut f64) {
    if i == costs.len() {
        let max = loads.iter().cloned().fold(0.0, f64::max);
        if max < *best {
            *best = max;
        }
        return;
    }
    for w in 0..loads.len() {
        // identical loads are interchangeable machines
        if loads[..w].contains(&loads[w]) {
            continue;
        }
        let candidate = loads[w] + costs[i];
        if candidate >= *best {
            continue;
        }
        loads[w] = candidate;
        assign(costs, i + 1, loads, best);
        loads[w] = candidate - costs[i];
    }
}

/// Longest-processing-time greedy: sort descending, place each cost on the
/// least-loaded machine (ties to the lowest index).
pub fn lpt_makespan(costs: &[f64], m: usize) -> f64 {
    if m == 0 || costs.is_empty() {
        return 0.0;
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut loads = vec![0.0f64; m];
    for c in sorted {
        let mut argmin = 0;
        for w in 1..m {
            if loads[w] < loads[argmin] {
                argmin = w;
            }
        }
        loads[argmin] += c;
    }
    loads.iter().cloned().fold(0.0, f64::max)
}
