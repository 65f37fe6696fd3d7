//! Roofline-style cost model for a sparse aggregation accelerator: cycles
//! are the max of compute time (adds through the adder array) and memory
//! time (bytes through HBM), with SRAM treated purely as a capacity check.
//! Model outputs support trend comparisons, nothing more.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::kernels::{make_dropout_mask, spmm, sspmm, FeatureMatrix, KernelStats};
use crate::prng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccelConfig {
    pub adders: u64,
    pub sram_bytes: u64,
    pub hbm_bytes_per_sec: f64,
    pub clock_hz: f64,
    pub element_bytes: u64,
}

impl Default for AccelConfig {
    fn default() -> Self {
        // 16384 fp32 adders, 100 MB SRAM, 1024 GB/s HBM, 500 MHz
        Self {
            adders: 16_384,
            sram_bytes: 100_000_000,
            hbm_bytes_per_sec: 1.024e12,
            clock_hz: 5.0e8,
            element_bytes: 4,
        }
    }
}

impl AccelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.adders == 0
            || self.sram_bytes == 0
            || self.element_bytes == 0
            || !(self.hbm_bytes_per_sec > 0.0)
            || !(self.clock_hz > 0.0)
        {
            return Err(Error::InvalidParam(
                "all accelerator parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Compute,
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleEstimate {
    pub cycles: f64,
    pub bound: Bound,
    pub compute_cycles: f64,
    pub memory_cycles: f64,
    pub working_set_bytes: u64,
    pub fits_sram: bool,
}

/// Cycle estimate for one aggregation kernel invocation. `binary_adjacency`
/// marks stats from the add-only fast path, where flops already count adds;
/// the weighted path counts a multiply-add as 2 flops but the array only
/// needs its adders, so adds = flops / 2.
pub fn aggregation_cycles(
    stats: &KernelStats,
    cfg: &AccelConfig,
    binary_adjacency: bool,
) -> Result<CycleEstimate> {
    cfg.validate()?;
    let adds = if binary_adjacency {
        stats.flops
    } else {
        stats.flops / 2
    };
    let compute_cycles = adds as f64 / cfg.adders as f64;
    let bytes = stats.bytes_read + stats.bytes_written;
    let memory_cycles = bytes as f64 * cfg.clock_hz / cfg.hbm_bytes_per_sec;
    let (cycles, bound) = if compute_cycles >= memory_cycles {
        (compute_cycles, Bound::Compute)
    } else {
        (memory_cycles, Bound::Memory)
    };
    let working_set_bytes = bytes;
    Ok(CycleEstimate {
        cycles,
        bound,
        compute_cycles,
        memory_cycles,
        working_set_bytes,
        fits_sram: working_set_bytes <= cfg.sram_bytes,
    })
}

/// Ratio of unmasked to masked aggregation cycles on a synthetic feature
/// matrix: how much the fused output mask saves at the given density
/// (fraction of outputs kept).
pub fn fused_speedup(g: &CsrGraph, d: usize, mask_density: f64, cfg: &AccelConfig) -> Result<f64> {
    fused_speedup_with_stats(g, d, mask_density, cfg).map(|(s, _, _)| s)
}

/// [`fused_speedup`] plus the measured stats of both runs, so callers can
/// relate the cycle ratio to the flop and traffic ratios.
pub fn fused_speedup_with_stats(
    g: &CsrGraph,
    d: usize,
    mask_density: f64,
    cfg: &AccelConfig,
) -> Result<(f64, KernelStats, KernelStats)> {
    if !(0.0..=1.0).contains(&mask_density) {
        return Err(Error::InvalidParam(format!(
            "mask density {mask_density} outside [0, 1]"
        )));
    }
    let n = g.num_nodes();
    let mut h = FeatureMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            h.set(i, j, prng::uniform(0xC0575, 1, &[i as u64, j as u64]));
        }
    }
    let (_, full_stats) = spmm(g, &h)?;
    let masked_stats = if mask_density >= 1.0 {
        full_stats
    } else {
        let mask = make_dropout_mask(n, d, 1.0 - mask_density, 0xC0575, 2)?;
        let (_, stats) = sspmm(g, &h, &mask)?;
        stats
    };
    let binary = !g.is_weighted();
    let full = aggregation_cycles(&full_stats, cfg, binary)?;
    let masked = aggregation_cycles(&masked_stats, cfg, binary)?;
    if masked.cycles == 0.0 {
        return Ok((1.0, full_stats, masked_stats));
    }
    Ok((full.cycles / masked.cycles, full_stats, masked_stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_rmat;

    #[test]
    fn one_cycle_at_full_adder_utilization() {
        let stats = KernelStats {
            flops: 2 * 16_384, // 16384 multiply-adds
            bytes_read: 1,
            bytes_written: 0,
            outputs_skipped: 0,
        };
        let est = aggregation_cycles(&stats, &AccelConfig::default(), false).unwrap();
        assert_eq!(est.cycles, 1.0);
        assert_eq!(est.bound, Bound::Compute);
    }

    #[test]
    fn zero_work_zero_cycles() {
        let est =
            aggregation_cycles(&KernelStats::default(), &AccelConfig::default(), false).unwrap();
        assert_eq!(est.cycles, 0.0);
    }

    #[test]
    fn rejects_zero_config() {
        let cfg = AccelConfig {
            adders: 0,
            ..Default::default()
        };
        assert!(aggregation_cycles(&KernelStats::default(), &cfg, false).is_err());
    }

    #[test]
    fn memory_bound_when_traffic_dominates() {
        let stats = KernelStats {
            flops: 2,
            bytes_read: 1 << 30,
            bytes_written: 0,
            outputs_skipped: 0,
        };
        let est = aggregation_cycles(&stats, &AccelConfig::default(), false).unwrap();
        assert_eq!(est.bound, Bound::Memory);
        assert!(est.memory_cycles > est.compute_cycles);
    }

    #[test]
    fn monotone_in_resources() {
        let stats = KernelStats {
            flops: 1 << 20,
            bytes_read: 1 << 20,
            bytes_written: 1 << 10,
            outputs_skipped: 0,
        };
        let base = AccelConfig::default();
        let more_adders = AccelConfig {
            adders: base.adders * 2,
            ..base
        };
        let more_bw = AccelConfig {
            hbm_bytes_per_sec: base.hbm_bytes_per_sec * 2.0,
            ..base
        };
        let c0 = aggregation_cycles(&stats, &base, false).unwrap().cycles;
        assert!(
            aggregation_cycles(&stats, &more_adders, false)
                .unwrap()
                .cycles
                <= c0
        );
        assert!(aggregation_cycles(&stats, &more_bw, false).unwrap().cycles <= c0);
    }

    #[test]
    fn full_density_speedup_is_exactly_one() {
        let g = gen_rmat(1 << 8, 4 << 8, [0.57, 0.19, 0.19, 0.05], 5)
            .unwrap()
            .normalize()
            .unwrap();
        let s = fused_speedup(&g, 16, 1.0, &AccelConfig::default()).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn half_density_compute_bound_tracks_flop_ratio() {
        let g = gen_rmat(1 << 8, 4 << 8, [0.57, 0.19, 0.19, 0.05], 5)
            .unwrap()
            .normalize()
            .unwrap();
        // effectively infinite bandwidth forces the compute bound
        let cfg = AccelConfig {
            hbm_bytes_per_sec: 1e30,
            ..Default::default()
        };
        let s = fused_speedup(&g, 16, 0.5, &cfg).unwrap();
        assert!(s > 1.5 && s < 2.5, "speedup {s}");
    }

    #[test]
    fn memory_bound_speedup_equals_traffic_ratio() {
        let g = gen_rmat(1 << 8, 4 << 8, [0.57, 0.19, 0.19, 0.05], 5)
            .unwrap()
            .normalize()
            .unwrap();
        // starved bandwidth forces the memory bound on both runs
        let cfg = AccelConfig {
            hbm_bytes_per_sec: 1.0,
            ..Default::default()
        };
        let (s, full, masked) = fused_speedup_with_stats(&g, 16, 0.5, &cfg).unwrap();
        let traffic_ratio = (full.bytes_read + full.bytes_written) as f64
            / (masked.bytes_read + masked.bytes_written) as f64;
        assert!(
            (s - traffic_ratio).abs() < 1e-12,
            "speedup {s} vs traffic {traffic_ratio}"
        );
        // skipping outputs saves fewer bytes than flops: the memory-bound
        // gain sits below the flop ratio
        let flop_ratio = full.flops as f64 / masked.flops as f64;
        assert!(s < flop_ratio);
    }
}
