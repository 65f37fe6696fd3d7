//! In-process execution of both distribution schemes. Workers hold only
//! their own shards; boundary features and re-shards move through explicit
//! gather steps. Per-element arithmetic replicates the reference kernels
//! operation for operation (same accumulation order, same masks), so a
//! single-worker run is bit-identical to the reference and multi-worker
//! runs differ only by reduction association.

use super::{remote_neighbors, MopPlan, PartitionPlan};
use crate::error::{Error, Result};
use crate::gcn::{
    dropout_scale, dropout_tag, loss_grad_rows, sgd_step, update_backward, update_forward,
    GcnModel, TrainConfig, TrainResult,
};
use crate::graph::{CsrGraph, Dataset};
use crate::kernels::{dropout_bit, FeatureMatrix, Real};
use crate::reports::{CommReport, LayerVolume};

/// Partition-parallel training: each worker owns a node subset, gathers its
/// remote neighbors' rows every layer (forward features, backward masked
/// gradients), and weight gradients are summed globally in worker order.
/// The returned ledger counts the rows actually gathered (per training
/// iteration; every iteration moves the same amount).
pub fn pp_execute<T: Real>(
    a_hat: &CsrGraph,
    plan: &PartitionPlan,
    model: &GcnModel<T>,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(TrainResult<T>, CommReport)> {
    config.validate()?;
    let n = a_hat.num_nodes();
    if plan.owners().len() != n {
        return Err(Error::DimMismatch(format!(
            "plan covers {} nodes, graph has {n}",
            plan.owners().len()
        )));
    }
    if dataset.features.rows() != n {
        return Err(Error::DimMismatch("dataset does not match graph".into()));
    }
    let m = plan.num_workers();
    let layers = model.num_layers();
    let remotes = remote_neighbors(a_hat, plan);

    // position of each node inside its owner's member list
    let mut local_index = vec![0usize; n];
    for i in 0..m {
        for (r, &v) in plan.members(i).iter().enumerate() {
            local_index[v] = r;
        }
    }
    let remote_rank =
        |i: usize, u: usize| -> usize { remotes[i].binary_search(&u).expect("gathered remote") };

    let x: FeatureMatrix<T> = dataset.features.cast();
    let mut model = model.clone();
    let lr = T::from_f64(config.learning_rate);
    let mut trace = Vec::with_capacity(config.iterations);
    let elem_bytes = T::BYTES;
    let mut ledger = vec![
        LayerVolume {
            fwd_elems: 0,
            bwd_elems: 0,
            fwd_bytes: 0,
            bwd_bytes: 0
        };
        layers
    ];
    let mut per_worker_recv = vec![0u64; m];

    for t in 0..config.iterations {
        let record = t == 0;
        // ---- forward ----
        // h[l][i]: rows of H^l owned by worker i
        let mut h: Vec<Vec<FeatureMatrix<T>>> = vec![Vec::with_capacity(m); layers + 1];
        let mut z: Vec<Vec<FeatureMatrix<T>>> = vec![Vec::with_capacity(m); layers];
        for i in 0..m {
            h[0].push(x.gather_rows(plan.members(i)));
        }
        for l in 0..layers {
            let last = l == layers - 1;
            let rate = if last { 0.0 } else { model.dropout_rate };
            let tag = dropout_tag(t, l);
            let d = model.dims[l];

            // gather boundary rows of H^l per worker
            let boundary: Vec<FeatureMatrix<T>> = (0..m)
                .map(|i| gather_remote_rows(&h[l], plan, &local_index, &remotes[i], d))
                .collect();
            if record {
                for (i, bd) in boundary.iter().enumerate() {
                    let elems = (bd.rows() * d) as u64;
                    ledger[l].fwd_elems += elems;
                    ledger[l].fwd_bytes += elems * elem_bytes;
                    per_worker_recv[i] += elems;
                }
            }

            for i in 0..m {
                let members = plan.members(i);
                let mut z_local = FeatureMatrix::zeros(members.len(), d);
                aggregate_rows(
                    a_hat,
                    members,
                    |u, j| {
                        if plan.owner(u) == i {
                            h[l][i].get(local_index[u], j)
                        } else {
                            boundary[i].get(remote_rank(i, u), j)
                        }
                    },
                    |v, j| dropout_bit(rate, model.seed, tag, v, j),
                    rate,
                    &mut z_local,
                );
                let h_next = update_forward(&z_local, &model.weights[l], last);
                z[l].push(z_local);
                h[l + 1].push(h_next);
            }
        }

        // ---- loss, sharded over owned nodes ----
        let inv_n = T::from_f64(1.0 / n as f64);
        let mut loss_sum = 0.0f64;
        let mut dh: Vec<FeatureMatrix<T>> = Vec::with_capacity(m);
        for i in 0..m {
            let labels: Vec<usize> = plan.members(i).iter().map(|&v| dataset.labels[v]).collect();
            let (partial, dlogits) = loss_grad_rows(&h[layers][i], &labels, inv_n)?;
            loss_sum += partial;
            dh.push(dlogits);
        }
        trace.push(loss_sum / n as f64);

        // ---- backward ----
        let mut dweights: Vec<FeatureMatrix<T>> = Vec::with_capacity(layers);
        for l in 0..layers {
            dweights.push(FeatureMatrix::zeros(model.dims[l + 1], model.dims[l]));
        }
        for l in (0..layers).rev() {
            let last = l == layers - 1;
            let rate = if last { 0.0 } else { model.dropout_rate };
            let tag = dropout_tag(t, l);
            let d = model.dims[l];
            let scale = T::from_f64(dropout_scale(rate));

            // local update backward; dW partials summed in worker order
            let mut dz: Vec<FeatureMatrix<T>> = Vec::with_capacity(m);
            for i in 0..m {
                let (dw_i, mut dz_i) =
                    update_backward(&dh[i], &h[l + 1][i], &z[l][i], &model.weights[l], last);
                add_assign(&mut dweights[l], &dw_i);
                // chain through the dropout mask before the rows travel
                for (r, &v) in plan.members(i).iter().enumerate() {
                    for j in 0..d {
                        if dropout_bit(rate, model.seed, tag, v, j) {
                            if rate != 0.0 {
                                let g = dz_i.get(r, j);
                                dz_i.set(r, j, g * scale);
                            }
                        } else {
                            dz_i.set(r, j, T::ZERO);
                        }
                    }
                }
                dz.push(dz_i);
            }

            // gather boundary gradient rows, then backward aggregation with
            // the downstream activation pattern fused as output mask
            let boundary: Vec<FeatureMatrix<T>> = (0..m)
                .map(|i| gather_remote_rows(&dz, plan, &local_index, &remotes[i], d))
                .collect();
            if record {
                for (i, bd) in boundary.iter().enumerate() {
                    let elems = (bd.rows() * d) as u64;
                    ledger[l].bwd_elems += elems;
                    ledger[l].bwd_bytes += elems * elem_bytes;
                    per_worker_recv[i] += elems;
                }
            }
            let mut next_dh: Vec<FeatureMatrix<T>> = Vec::with_capacity(m);
            for i in 0..m {
                let members = plan.members(i);
                let mut dh_local = FeatureMatrix::zeros(members.len(), d);
                aggregate_rows(
                    a_hat,
                    members,
                    |u, j| {
                        if plan.owner(u) == i {
                            dz[i].get(local_index[u], j)
                        } else {
                            boundary[i].get(remote_rank(i, u), j)
                        }
                    },
                    |v, j| l == 0 || h[l][i].get(local_index[v], j) > T::ZERO,
                    0.0,
                    &mut dh_local,
                );
                next_dh.push(dh_local);
            }
            dh = next_dh;
        }

        sgd_step(&mut model.weights, &dweights, lr);
    }
    let report = CommReport::new("pp", m, ledger, per_worker_recv);
    Ok((TrainResult { model, trace }, report))
}

/// Masked aggregation over the rows in `members`: identical element
/// arithmetic to the fused kernel (ascending-neighbor accumulation, then
/// the keep-scale multiply).
fn aggregate_rows<T: Real>(
    a_hat: &CsrGraph,
    members: &[usize],
    fetch: impl Fn(usize, usize) -> T,
    mask: impl Fn(usize, usize) -> bool,
    dropout_rate: f64,
    out: &mut FeatureMatrix<T>,
) {
    let d = out.cols();
    let scale = T::from_f64(dropout_scale(dropout_rate));
    for (r, &v) in members.iter().enumerate() {
        for j in 0..d {
            if !mask(v, j) {
                continue;
            }
            let mut acc = T::ZERO;
            for (u, w) in a_hat.row_entries(v) {
                acc += T::from_f64(w) * fetch(u, j);
            }
            if dropout_rate != 0.0 {
                acc = acc * scale;
            }
            out.set(r, j, acc);
        }
    }
}

fn gather_remote_rows<T: Real>(
    store: &[FeatureMatrix<T>],
    plan: &PartitionPlan,
    local_index: &[usize],
    remotes: &[usize],
    d: usize,
) -> FeatureMatrix<T> {
    let mut bd = FeatureMatrix::zeros(remotes.len(), d);
    for (r, &u) in remotes.iter().enumerate() {
        bd.row_mut(r)
            .copy_from_slice(store[plan.owner(u)].row(local_index[u]));
    }
    bd
}

fn add_assign<T: Real>(acc: &mut FeatureMatrix<T>, other: &FeatureMatrix<T>) {
    for j in 0..acc.rows() {
        for k in 0..acc.cols() {
            let v = acc.get(j, k) + other.get(j, k);
            acc.set(j, k, v);
        }
    }
}

/// Mixed-parallelism training. Aggregation workers own feature-column
/// slices, update workers own node-row ranges, and every layer runs two
/// all-to-all re-shards whose element counts land in the returned ledger
/// (volumes are per training iteration; every iteration moves the same
/// amount).
pub fn mop_execute<T: Real>(
    a_hat: &CsrGraph,
    plan: &MopPlan,
    model: &GcnModel<T>,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(TrainResult<T>, CommReport)> {
    config.validate()?;
    let n = a_hat.num_nodes();
    if plan.num_nodes != n {
        return Err(Error::DimMismatch(format!(
            "plan covers {} nodes, graph has {n}",
            plan.num_nodes
        )));
    }
    if plan.dims != model.dims {
        return Err(Error::DimMismatch(
            "plan dims do not match model dims".into(),
        ));
    }
    if dataset.features.rows() != n {
        return Err(Error::DimMismatch("dataset does not match graph".into()));
    }
    let m = plan.num_workers;
    let layers = model.num_layers();
    let elem_bytes = T::BYTES;

    let x: FeatureMatrix<T> = dataset.features.cast();
    let mut model = model.clone();
    let lr = T::from_f64(config.learning_rate);
    let mut trace = Vec::with_capacity(config.iterations);
    let mut ledger = vec![
        LayerVolume {
            fwd_elems: 0,
            bwd_elems: 0,
            fwd_bytes: 0,
            bwd_bytes: 0
        };
        layers
    ];
    let mut per_worker_recv = vec![0u64; 2 * m];

    for t in 0..config.iterations {
        let record = t == 0;

        // agg_h[i][l]: column slice of H^l held by aggregation worker i
        let mut agg_h: Vec<Vec<FeatureMatrix<T>>> = (0..m)
            .map(|i| {
                let (p, q) = plan.feature_range(0, i);
                vec![x.slice_cols(p, q)]
            })
            .collect();
        // upd_z[k][l], upd_h[k][l]: row shards cached by update worker k
        let mut upd_z: Vec<Vec<FeatureMatrix<T>>> = vec![Vec::with_capacity(layers); m];
        let mut upd_h: Vec<Vec<FeatureMatrix<T>>> = vec![Vec::with_capacity(layers); m];

        // ---- forward ----
        for l in 0..layers {
            let last = l == layers - 1;
            let rate = if last { 0.0 } else { model.dropout_rate };
            let tag = dropout_tag(t, l);
            let d_in = model.dims[l];
            let d_out = model.dims[l + 1];

            // aggregation over owned feature columns
            let z_slices: Vec<FeatureMatrix<T>> = (0..m)
                .map(|i| {
                    let (p, q) = plan.feature_range(l, i);
                    let mut z = FeatureMatrix::zeros(n, q - p);
                    let scale = T::from_f64(dropout_scale(rate));
                    for v in 0..n {
                        for jj in 0..q - p {
                            let j = p + jj;
                            if !dropout_bit(rate, model.seed, tag, v, j) {
                                continue;
                            }
                            let mut acc = T::ZERO;
                            for (u, w) in a_hat.row_entries(v) {
                                acc += T::from_f64(w) * agg_h[i][l].get(u, jj);
                            }
                            if rate != 0.0 {
                                acc = acc * scale;
                            }
                            z.set(v, jj, acc);
                        }
                    }
                    z
                })
                .collect();

            // all-to-all: feature slices -> node rows
            if record {
                ledger[l].fwd_elems += (n * d_in) as u64;
                ledger[l].fwd_bytes += (n * d_in) as u64 * elem_bytes;
            }
            for k in 0..m {
                let (lo, hi) = plan.node_range(k);
                let mut z_rows = FeatureMatrix::zeros(hi - lo, d_in);
                for i in 0..m {
                    let (p, q) = plan.feature_range(l, i);
                    for v in lo..hi {
                        for jj in 0..q - p {
                            z_rows.set(v - lo, p + jj, z_slices[i].get(v, jj));
                        }
                    }
                }
                if record {
                    per_worker_recv[m + k] += ((hi - lo) * d_in) as u64;
                }
                let h_rows = update_forward(&z_rows, &model.weights[l], last);
                upd_z[k].push(z_rows);
                upd_h[k].push(h_rows);
            }

            // all-to-all back: node rows -> feature slices of the next layer
            // (run for every layer, the loop is uniform; the last layer's
            // slices only serve the backward masks)
            if record {
                ledger[l].fwd_elems += (n * d_out) as u64;
                ledger[l].fwd_bytes += (n * d_out) as u64 * elem_bytes;
            }
            for i in 0..m {
                let (p, q) = plan.feature_range(l + 1, i);
                let mut slice = FeatureMatrix::zeros(n, q - p);
                for k in 0..m {
                    let (lo, hi) = plan.node_range(k);
                    for v in lo..hi {
                        for jj in 0..q - p {
                            slice.set(v, jj, upd_h[k][l].get(v - lo, p + jj));
                        }
                    }
                }
                if record {
                    per_worker_recv[i] += (n * (q - p)) as u64;
                }
                agg_h[i].push(slice);
            }
        }

        // ---- loss on the update workers' node shards ----
        let inv_n = T::from_f64(1.0 / n as f64);
        let mut loss_sum = 0.0f64;
        let mut dh_rows: Vec<FeatureMatrix<T>> = Vec::with_capacity(m);
        for k in 0..m {
            let (lo, hi) = plan.node_range(k);
            let labels = &dataset.labels[lo..hi];
            let (partial, dlogits) = loss_grad_rows(&upd_h[k][layers - 1], labels, inv_n)?;
            loss_sum += partial;
            dh_rows.push(dlogits);
        }
        trace.push(loss_sum / n as f64);

        // ---- backward ----
        let mut dweights: Vec<FeatureMatrix<T>> = (0..layers)
            .map(|l| FeatureMatrix::zeros(model.dims[l + 1], model.dims[l]))
            .collect();
        for l in (0..layers).rev() {
            let last = l == layers - 1;
            let rate = if last { 0.0 } else { model.dropout_rate };
            let tag = dropout_tag(t, l);
            let d_in = model.dims[l];
            let scale = T::from_f64(dropout_scale(rate));

            // update backward on node shards; dW partials in worker order
            let mut dz_rows: Vec<FeatureMatrix<T>> = Vec::with_capacity(m);
            for k in 0..m {
                let (lo, _hi) = plan.node_range(k);
                let (dw_k, mut dz_k) = update_backward(
                    &dh_rows[k],
                    &upd_h[k][l],
                    &upd_z[k][l],
                    &model.weights[l],
                    last,
                );
                add_assign(&mut dweights[l], &dw_k);
                for r in 0..dz_k.rows() {
                    let v = lo + r;
                    for j in 0..d_in {
                        if dropout_bit(rate, model.seed, tag, v, j) {
                            if rate != 0.0 {
                                let g = dz_k.get(r, j);
                                dz_k.set(r, j, g * scale);
                            }
                        } else {
                            dz_k.set(r, j, T::ZERO);
                        }
                    }
                }
                dz_rows.push(dz_k);
            }

            // all-to-all: node rows -> feature slices
            if record {
                ledger[l].bwd_elems += (n * d_in) as u64;
                ledger[l].bwd_bytes += (n * d_in) as u64 * elem_bytes;
            }
            let dz_slices: Vec<FeatureMatrix<T>> = (0..m)
                .map(|i| {
                    let (p, q) = plan.feature_range(l, i);
                    let mut slice = FeatureMatrix::zeros(n, q - p);
                    for k in 0..m {
                        let (lo, hi) = plan.node_range(k);
                        for v in lo..hi {
                            for jj in 0..q - p {
                                slice.set(v, jj, dz_rows[k].get(v - lo, p + jj));
                            }
                        }
                    }
                    if record {
                        per_worker_recv[i] += (n * (q - p)) as u64;
                    }
                    slice
                })
                .collect();

            // backward aggregation on feature slices, masked by the
            // downstream activation pattern
            let dh_slices: Vec<FeatureMatrix<T>> = (0..m)
                .map(|i| {
                    let (p, q) = plan.feature_range(l, i);
                    let mut out = FeatureMatrix::zeros(n, q - p);
                    for v in 0..n {
                        for jj in 0..q - p {
                            if l > 0 && !(agg_h[i][l].get(v, jj) > T::ZERO) {
                                continue;
                            }
                            let mut acc = T::ZERO;
                            for (u, w) in a_hat.row_entries(v) {
                                acc += T::from_f64(w) * dz_slices[i].get(u, jj);
                            }
                            out.set(v, jj, acc);
                        }
                    }
                    out
                })
                .collect();

            // re-shard gradients to node rows for the next (lower) layer;
            // at l = 0 the slices are the input gradient, which stays put
            if l > 0 {
                if record {
                    ledger[l].bwd_elems += (n * d_in) as u64;
                    ledger[l].bwd_bytes += (n * d_in) as u64 * elem_bytes;
                }
                let mut next: Vec<FeatureMatrix<T>> = Vec::with_capacity(m);
                for k in 0..m {
                    let (lo, hi) = plan.node_range(k);
                    let mut rows = FeatureMatrix::zeros(hi - lo, d_in);
                    for i in 0..m {
                        let (p, q) = plan.feature_range(l, i);
                        for v in lo..hi {
                            for jj in 0..q - p {
                                rows.set(v - lo, p + jj, dh_slices[i].get(v, jj));
                            }
                        }
                    }
                    if record {
                        per_worker_recv[m + k] += ((hi - lo) * d_in) as u64;
                    }
                    next.push(rows);
                }
                dh_rows = next;
            }
        }

        sgd_step(&mut model.weights, &dweights, lr);
    }

    let report = CommReport::new("mop", m, ledger, per_worker_recv);
    Ok((TrainResult { model, trace }, report))
}
