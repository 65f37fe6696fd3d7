//! Single-process reference GCN: forward, backward, loss, and plain
//! gradient-descent training. This is the numeric ground truth that both
//! distributed simulators must reproduce.
//!
//! A layer is aggregation `Z = A_hat * H` (masked by the per-iteration
//! dropout pattern) followed by the update `H' = relu(Z * W^T)`; the last
//! layer omits the activation so the logits feed the loss directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Dataset};
use crate::kernels::{make_dropout_mask, make_relu_mask, sspmm, Bitmask, FeatureMatrix, Real};
use crate::prng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn bytes(self) -> u64 {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::InvalidParam(format!("unknown precision {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub precision: Precision,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParam("iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParam("learning rate must be > 0".into()));
        }
        Ok(())
    }
}

/// GCN weights plus the hyperparameters that define the architecture.
/// `dims[l]` is the feature width entering layer l; weights W[l] have shape
/// dims[l+1] x dims[l].
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel<T = f64> {
    pub dims: Vec<usize>,
    pub weights: Vec<FeatureMatrix<T>>,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl<T: Real> GcnModel<T> {
    /// Seeded init: W[l][j][k] uniform in (-1/sqrt(dims[l]), +1/sqrt(dims[l])).
    pub fn init(dims: &[usize], dropout_rate: f64, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParam(
                "need at least dims for one layer".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParam("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidParam(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        let mut weights = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let bound = 1.0 / (dims[l] as f64).sqrt();
            let mut w = FeatureMatrix::zeros(dims[l + 1], dims[l]);
            for j in 0..dims[l + 1] {
                for k in 0..dims[l] {
                    let u = prng::uniform(seed, stream::WEIGHTS, &[l as u64, j as u64, k as u64]);
                    w.set(j, k, T::from_f64((2.0 * u - 1.0) * bound));
                }
            }
            weights.push(w);
        }
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            dropout_rate,
            seed,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }
}

/// Everything the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T = f64> {
    /// h[l] for l = 0..=L; h[L] are the logits.
    pub h: Vec<FeatureMatrix<T>>,
    /// Masked, scaled aggregation outputs z[l] for l = 0..L.
    pub z: Vec<FeatureMatrix<T>>,
    /// Dropout masks used at each layer.
    pub masks: Vec<Bitmask>,
}

/// Tag for the dropout mask of training iteration `iter`, layer `layer`.
/// Shared by the reference and both simulators so masks line up exactly.
pub fn dropout_tag(iter: usize, layer: usize) -> u64 {
    (iter as u64) << 16 | layer as u64
}

/// Keep-probability scale applied to surviving dropout entries.
pub fn dropout_scale(rate: f64) -> f64 {
    if rate == 0.0 {
        1.0
    } else {
        1.0 / (1.0 - rate)
    }
}

/// Scale mask-on entries in place; mask-off entries are already zero.
pub fn apply_mask_scale<T: Real>(z: &mut FeatureMatrix<T>, mask: &Bitmask, scale: f64) {
    if scale == 1.0 {
        return;
    }
    let s = T::from_f64(scale);
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            if mask.get(i, j) {
                let v = z.get(i, j);
                z.set(i, j, v * s);
            }
        }
    }
}

/// One layer: masked aggregation then update. Returns (z, h_next).
/// `last` skips the activation.
pub fn layer_forward<T: Real>(
    a_hat: &CsrGraph,
    h: &FeatureMatrix<T>,
    w: &FeatureMatrix<T>,
    mask: Option<&Bitmask>,
    dropout_rate: f64,
    last: bool,
) -> Result<(FeatureMatrix<T>, FeatureMatrix<T>)> {
    if w.cols() != h.cols() {
        return Err(Error::DimMismatch(format!(
            "weight cols {} != feature cols {}",
            w.cols(),
            h.cols()
        )));
    }
    let ones;
    let mask = match mask {
        Some(m) => m,
        None => {
            ones = Bitmask::ones(h.rows(), h.cols());
            &ones
        }
    };
    let (mut z, _stats) = sspmm(a_hat, h, mask)?;
    apply_mask_scale(&mut z, mask, dropout_scale(dropout_rate));
    let h_next = update_forward(&z, w, last);
    Ok((z, h_next))
}

/// Dense update H' = act(Z * W^T), row by row, ascending-k accumulation.
pub fn update_forward<T: Real>(
    z: &FeatureMatrix<T>,
    w: &FeatureMatrix<T>,
    last: bool,
) -> FeatureMatrix<T> {
    let rows = z.rows();
    let out_dim = w.rows();
    let mut h = FeatureMatrix::zeros(rows, out_dim);
    for i in 0..rows {
        let zi = z.row(i);
        for j in 0..out_dim {
            let wj = w.row(j);
            let mut acc = T::ZERO;
            for k in 0..zi.len() {
                acc += zi[k] * wj[k];
            }
            if !last && acc < T::ZERO {
                acc = T::ZERO;
            }
            h.set(i, j, acc);
        }
    }
    h
}

/// Full forward pass for training iteration `iter` (the iteration keys the
/// dropout masks). The last layer has neither activation nor dropout.
pub fn model_forward<T: Real>(
    model: &GcnModel<T>,
    a_hat: &CsrGraph,
    x: &FeatureMatrix<T>,
    iter: usize,
) -> Result<(FeatureMatrix<T>, ForwardCache<T>)> {
    let layers = model.num_layers();
    let n = a_hat.num_nodes();
    if x.rows() != n || x.cols() != model.dims[0] {
        return Err(Error::DimMismatch(format!(
            "input {}x{} != expected {n}x{}",
            x.rows(),
            x.cols(),
            model.dims[0]
        )));
    }
    let mut cache = ForwardCache {
        h: Vec::with_capacity(layers + 1),
        z: Vec::with_capacity(layers),
        masks: Vec::with_capacity(layers),
    };
    cache.h.push(x.clone());
    for l in 0..layers {
        let last = l == layers - 1;
        let rate = if last { 0.0 } else { model.dropout_rate };
        let mask = make_dropout_mask(n, model.dims[l], rate, model.seed, dropout_tag(iter, l))?;
        let (z, h_next) = layer_forward(
            a_hat,
            &cache.h[l],
            &model.weights[l],
            Some(&mask),
            rate,
            last,
        )?;
        cache.z.push(z);
        cache.masks.push(mask);
        cache.h.push(h_next);
    }
    let logits = cache.h[layers].clone();
    Ok((logits, cache))
}

/// Mean softmax cross-entropy over all nodes, with its gradient
/// d(loss)/d(logits) = (softmax - onehot) / n.
pub fn loss_and_grad<T: Real>(
    logits: &FeatureMatrix<T>,
    labels: &[usize],
) -> Result<(f64, FeatureMatrix<T>)> {
    let n = logits.rows();
    if n == 0 {
        return Err(Error::Contract("loss over zero nodes".into()));
    }
    let inv_n = T::from_f64(1.0 / n as f64);
    let (loss_sum, dlogits) = loss_grad_rows(logits, labels, inv_n)?;
    Ok((loss_sum / n as f64, dlogits))
}

/// Cross-entropy partial over a block of rows: the sum of per-node losses
/// plus gradient rows pre-scaled by `inv_n` (the global 1/n, so shards of a
/// larger loss pass it in). Shared by the reference and both simulators.
pub fn loss_grad_rows<T: Real>(
    logits: &FeatureMatrix<T>,
    labels: &[usize],
    inv_n: T,
) -> Result<(f64, FeatureMatrix<T>)> {
    let rows = logits.rows();
    if labels.len() != rows {
        return Err(Error::DimMismatch(format!(
            "labels length {} != logits rows {rows}",
            labels.len()
        )));
    }
    let classes = logits.cols();
    let mut dlogits = FeatureMatrix::zeros(rows, classes);
    let mut loss_sum = 0.0f64;
    for v in 0..rows {
        let y = labels[v];
        if y >= classes {
            return Err(Error::Range(format!("label {y} >= classes {classes}")));
        }
        let row = logits.row(v);
        let mut m = row[0];
        for &x in row {
            if x > m {
                m = x;
            }
        }
        let mut denom = T::ZERO;
        for &x in row {
            denom += (x - m).exp();
        }
        // loss_v = log(sum exp(x - m)) - (x_y - m)
        loss_sum += (denom.ln() - (row[y] - m)).to_f64();
        for j in 0..classes {
            let softmax = (row[j] - m).exp() / denom;
            let grad = if j == y { softmax - T::ONE } else { softmax };
            dlogits.set(v, j, grad * inv_n);
        }
    }
    Ok((loss_sum, dlogits))
}

/// Gradients from one backward pass.
#[derive(Debug, Clone)]
pub struct Gradients<T = f64> {
    pub weights: Vec<FeatureMatrix<T>>,
    pub input: FeatureMatrix<T>,
}

/// Backward through the update step: given dH' (post-activation grad),
/// returns (dP masked by the activation pattern, dW, dZ).
pub fn update_backward<T: Real>(
    dh_next: &FeatureMatrix<T>,
    h_next: &FeatureMatrix<T>,
    z: &FeatureMatrix<T>,
    w: &FeatureMatrix<T>,
    last: bool,
) -> (FeatureMatrix<T>, FeatureMatrix<T>) {
    let rows = dh_next.rows();
    let out_dim = w.rows();
    let in_dim = w.cols();

    // dP = dH' masked by relu'(P) (p > 0 iff h_next > 0); last layer linear.
    let mut dp = dh_next.clone();
    if !last {
        for i in 0..rows {
            for j in 0..out_dim {
                if !(h_next.get(i, j) > T::ZERO) {
                    dp.set(i, j, T::ZERO);
                }
            }
        }
    }

    // dW[j][k] = sum_i dP[i][j] * Z[i][k], ascending i.
    let mut dw = FeatureMatrix::zeros(out_dim, in_dim);
    for i in 0..rows {
        let dpi = dp.row(i);
        let zi = z.row(i);
        for j in 0..out_dim {
            let g = dpi[j];
            let dwj = dw.row_mut(j);
            for k in 0..in_dim {
                dwj[k] += g * zi[k];
            }
        }
    }

    // dZ = dP * W, row-local.
    let mut dz = FeatureMatrix::zeros(rows, in_dim);
    for i in 0..rows {
        let dpi = dp.row(i);
        let dzi = dz.row_mut(i);
        for j in 0..out_dim {
            let g = dpi[j];
            let wj = w.row(j);
            for k in 0..in_dim {
                dzi[k] += g * wj[k];
            }
        }
    }
    (dw, dz)
}

/// Full reverse pass. Backward aggregation reuses the symmetric propagation
/// matrix and is fused with the downstream ReLU pattern: outputs that the
/// previous layer's activation zeroes anyway are skipped.
pub fn model_backward<T: Real>(
    model: &GcnModel<T>,
    a_hat: &CsrGraph,
    cache: &ForwardCache<T>,
    dlogits: &FeatureMatrix<T>,
) -> Result<Gradients<T>> {
    let layers = model.num_layers();
    let mut dweights: Vec<Option<FeatureMatrix<T>>> = vec![None; layers];
    let mut dh = dlogits.clone();
    for l in (0..layers).rev() {
        let last = l == layers - 1;
        let rate = if last { 0.0 } else { model.dropout_rate };
        let (dw, mut dz) =
            update_backward(&dh, &cache.h[l + 1], &cache.z[l], &model.weights[l], last);
        dweights[l] = Some(dw);

        // chain through the dropout mask and its keep-scale
        let mask = &cache.masks[l];
        let scale = T::from_f64(dropout_scale(rate));
        for i in 0..dz.rows() {
            for j in 0..dz.cols() {
                if mask.get(i, j) {
                    let v = dz.get(i, j);
                    dz.set(i, j, v * scale);
                } else {
                    dz.set(i, j, T::ZERO);
                }
            }
        }

        // backward aggregation; for l >= 1 the consumer applies relu'(h[l]),
        // so those dead outputs are skipped via the fused mask
        let out_mask = if l > 0 {
            make_relu_mask(&cache.h[l])
        } else {
            Bitmask::ones(dz.rows(), dz.cols())
        };
        let (next_dh, _stats) = sspmm(a_hat, &dz, &out_mask)?;
        dh = next_dh;
    }
    Ok(Gradients {
        weights: dweights.into_iter().map(Option::unwrap).collect(),
        input: dh,
    })
}

/// Training outcome: final model plus the per-iteration loss trace.
#[derive(Debug, Clone)]
pub struct TrainResult<T = f64> {
    pub model: GcnModel<T>,
    pub trace: Vec<f64>,
}

/// One gradient-descent step, shared by the reference and both simulators
/// so the update arithmetic is identical everywhere.
pub fn sgd_step<T: Real>(weights: &mut [FeatureMatrix<T>], grads: &[FeatureMatrix<T>], lr: T) {
    for (w, dw) in weights.iter_mut().zip(grads) {
        for j in 0..w.rows() {
            for k in 0..w.cols() {
                let updated = w.get(j, k) - lr * dw.get(j, k);
                w.set(j, k, updated);
            }
        }
    }
}

/// Plain gradient descent for `config.iterations` steps. The trace records
/// the loss of each iteration's forward pass, before the weight update.
pub fn train<T: Real>(
    model: &GcnModel<T>,
    a_hat: &CsrGraph,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<TrainResult<T>> {
    config.validate()?;
    let x: FeatureMatrix<T> = dataset.features.cast();
    let mut model = model.clone();
    let lr = T::from_f64(config.learning_rate);
    let mut trace = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        let (logits, cache) = model_forward(&model, a_hat, &x, t)?;
        let (loss, dlogits) = loss_and_grad(&logits, &dataset.labels)?;
        trace.push(loss);
        let grads = model_backward(&model, a_hat, &cache, &dlogits)?;
        sgd_step(&mut model.weights, &grads.weights, lr);
    }
    Ok(TrainResult { model, trace })
}

/// Per-node per-layer cost: d_l * (d_l1 + deg).
pub fn flops_node(deg: u64, d_l: u64, d_l1: u64) -> u64 {
    d_l * (d_l1 + deg)
}
