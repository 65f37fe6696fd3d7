//! Property tests for the structural invariants: file-format round-trips,
//! permutation round-trips, kernel mask identities, scheduling bounds.

mod common;

use proptest::prelude::*;

use mixlab_core::graph::CsrGraph;
use mixlab_core::io::{from_hex_float, load_csr, save_csr, to_hex_float};
use mixlab_core::kernels::{spmm, sspmm, Bitmask};
use mixlab_core::parallel::{brute_force_makespan, lpt_makespan};
use mixlab_core::pipeline::{build_schedule, simulate};
use mixlab_core::reorder::{apply_ordering, bandwidth, rcm_order, NodeOrdering};

fn arb_graph() -> impl Strategy<Value = CsrGraph> {
    (2usize..24, any::<u64>()).prop_map(|(n, seed)| {
        let p = 0.05 + (seed % 40) as f64 / 100.0;
        common::random_graph(n, p, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csr_file_roundtrip_identity(g in arb_graph(), weighted in any::<bool>()) {
        // weights drawn f32-exact, since the file stores f32
        let g = if weighted {
            let values: Vec<f64> = (0..g.nnz())
                .map(|i| (((i % 13) + 1) as f32 * 0.25f32) as f64)
                .collect();
            CsrGraph::from_parts(
                g.num_nodes(),
                g.row_offsets().to_vec(),
                g.col_indices().to_vec(),
                Some(values),
                g.is_symmetric(),
            ).unwrap()
        } else { g };
        let dir = std::env::temp_dir().join("mixlab-props");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("g{}.mxg", g.nnz()));
        save_csr(&path, &g).unwrap();
        let back = load_csr(&path).unwrap();
        prop_assert_eq!(g, back);
    }

    #[test]
    fn hex_float_roundtrips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let back = from_hex_float(&to_hex_float(x)).unwrap();
        prop_assert_eq!(x.to_bits(), back.to_bits());
    }

    #[test]
    fn ordering_roundtrip(g in arb_graph(), seed in any::<u64>()) {
        let n = g.num_nodes();
        let mut perm: Vec<usize> = (0..n).collect();
        // deterministic shuffle
        for i in (1..n).rev() {
            let j = (mixlab_core::prng::hash(&[seed, i as u64]) % (i as u64 + 1)) as usize;
            perm.swap(i, j);
        }
        let o = NodeOrdering::from_perm(perm).unwrap();
        let fwd = apply_ordering(&g, &o).unwrap();
        let back = apply_ordering(&fwd, &o.inverse()).unwrap();
        prop_assert_eq!(back, g.clone());
        // relabeling by o makes position order the identity
        prop_assert_eq!(bandwidth(&g, &o), bandwidth(&fwd, &NodeOrdering::identity(n)));
    }

    #[test]
    fn rcm_is_valid_permutation(g in arb_graph()) {
        let o = rcm_order(&g).unwrap();
        let mut sorted = o.perm().to_vec();
        sorted.sort_unstable();
        let expect: Vec<usize> = (0..g.num_nodes()).collect();
        prop_assert_eq!(sorted, expect);
    }

    #[test]
    fn all_ones_mask_is_plain_spmm(g in arb_graph(), d in 1usize..6) {
        let a = g.normalize().unwrap();
        let h = common::random_features(a.num_nodes(), d, 99);
        let (full, fs) = spmm(&a, &h).unwrap();
        let (masked, ms) = sspmm(&a, &h, &Bitmask::ones(a.num_nodes(), d)).unwrap();
        prop_assert_eq!(full.data(), masked.data());
        prop_assert_eq!(fs, ms);
    }

    #[test]
    fn lpt_dominated_by_optimum_and_bound(
        costs in proptest::collection::vec(1u32..50, 1..11),
        m in 2usize..5,
    ) {
        let costs: Vec<f64> = costs.into_iter().map(f64::from).collect();
        let opt = brute_force_makespan(&costs, m).unwrap();
        let lpt = lpt_makespan(&costs, m);
        prop_assert!(lpt >= opt);
        prop_assert!(lpt <= (4.0 / 3.0 - 1.0 / (3.0 * m as f64)) * opt + 1e-9);
        // any assignment is bounded below by the perfectly balanced load
        let lower: f64 = costs.iter().sum::<f64>() / m as f64;
        prop_assert!(opt + 1e-9 >= lower);
    }

    #[test]
    fn timeline_never_precedes_dependency(g in arb_graph(), s_frac in 0.1f64..1.0) {
        let n = g.num_nodes();
        let s = ((n as f64 * s_frac) as usize).clamp(1, n);
        let o = rcm_order(&g).unwrap();
        let schedule = build_schedule(&g, &o, s).unwrap();
        let t = simulate(&schedule, 3, 1, 1).unwrap();
        // batches appear exactly once per engine per round
        let mut dense_seen = vec![0usize; 3 * s];
        let mut sparse_first = vec![usize::MAX; 3 * s];
        let mut dense_done = vec![0usize; 3 * s];
        for rec in &t.steps {
            if let mixlab_core::pipeline::EngineSlot::Busy(r, b) = rec.dense {
                dense_seen[r * s + b] += 1;
                dense_done[r * s + b] = rec.step + 1;
            }
            if let mixlab_core::pipeline::EngineSlot::Busy(r, b) = rec.sparse {
                sparse_first[r * s + b] = sparse_first[r * s + b].min(rec.step);
            }
        }
        prop_assert!(dense_seen.iter().all(|&c| c == 1));
        for r in 0..3 {
            for k in 0..s {
                prop_assert!(sparse_first[r * s + k] >= dense_done[r * s + schedule.dep[k]]);
            }
        }
    }

    #[test]
    fn dropout_mask_padding_stays_zero(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
        let m = mixlab_core::kernels::make_dropout_mask(rows, cols, 0.5, seed, 1).unwrap();
        prop_assert!(m.padding_is_zero());
    }
}
