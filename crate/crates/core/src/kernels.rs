//! Dense feature matrices, bitmap masks, and the sparse kernels
//! SpMM, SDDMM, and the fused masked variant that skips computation for
//! masked-out outputs while keeping exact FLOP and byte accounting.
//!
//! Accumulation order is fixed (ascending neighbor id per output element),
//! so results are bit-reproducible and independent of how output rows are
//! distributed across threads or simulated workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::prng::{self, stream};

/// Scalar type for kernels and the model: f32 or f64.
pub trait Real:
    Copy
    + PartialOrd
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + Send
    + Sync
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    const BYTES: u64;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const BYTES: u64 = 8;
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const BYTES: u64 = 4;
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn ln(self) -> Self {
        f32::ln(self)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

/// Dense row-major matrix of node features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("feature entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: T) {
        self.data[i * self.cols + j] = x;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Copy of the rows `ids`, in the given order.
    pub fn gather_rows(&self, ids: &[usize]) -> FeatureMatrix<T> {
        let mut out = FeatureMatrix::zeros(ids.len(), self.cols);
        for (r, &i) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(i));
        }
        out
    }

    /// Copy of the column slice [from, to).
    pub fn slice_cols(&self, from: usize, to: usize) -> FeatureMatrix<T> {
        let mut out = FeatureMatrix::zeros(self.rows, to - from);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[from..to]);
        }
        out
    }

    /// Converts element-wise through f64.
    pub fn cast<U: Real>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &FeatureMatrix<T>) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }
}

/// Packed row-major bitmap.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitmask {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
}

impl Bitmask {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let bits = rows * cols;
        Self {
            rows,
            cols,
            words: vec![0u64; bits.div_ceil(64)],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for w in &mut m.words {
            *w = u64::MAX;
        }
        m.clear_padding();
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let bit = i * self.cols + j;
        (self.words[bit / 64] >> (bit % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        let bit = i * self.cols + j;
        if on {
            self.words[bit / 64] |= 1 << (bit % 64);
        } else {
            self.words[bit / 64] &= !(1 << (bit % 64));
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn count_zeros(&self) -> u64 {
        (self.rows * self.cols) as u64 - self.count_ones()
    }

    /// Copy of the column slice [from, to).
    pub fn slice_cols(&self, from: usize, to: usize) -> Bitmask {
        let mut out = Bitmask::zeros(self.rows, to - from);
        for i in 0..self.rows {
            for j in from..to {
                if self.get(i, j) {
                    out.set(i, j - from, true);
                }
            }
        }
        out
    }

    // Trailing pad bits must stay zero so popcounts are exact.
    fn clear_padding(&mut self) {
        let bits = self.rows * self.cols;
        if bits % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (bits % 64)) - 1;
            }
        }
    }

    pub fn padding_is_zero(&self) -> bool {
        let bits = self.rows * self.cols;
        if bits % 64 == 0 {
            return true;
        }
        match self.words.last() {
            Some(last) => last & !((1u64 << (bits % 64)) - 1) == 0,
            None => true,
        }
    }
}

/// Work and traffic accounting for one kernel invocation.
/// A multiply-add counts as 2 flops; the unweighted fast path counts adds only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelStats {
    pub flops: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub outputs_skipped: u64,
}

impl std::ops::Add for KernelStats {
    type Output = KernelStats;
    fn add(self, o: KernelStats) -> KernelStats {
        KernelStats {
            flops: self.flops + o.flops,
            bytes_read: self.bytes_read + o.bytes_read,
            bytes_written: self.bytes_written + o.bytes_written,
            outputs_skipped: self.outputs_skipped + o.outputs_skipped,
        }
    }
}

const INDEX_BYTES: u64 = 8;
const WEIGHT_BYTES: u64 = 8;

fn check_spmm_dims<T: Real>(a: &CsrGraph, h: &FeatureMatrix<T>) -> Result<()> {
    if h.rows() != a.num_nodes() {
        return Err(Error::DimMismatch(format!(
            "feature rows {} != graph nodes {}",
            h.rows(),
            a.num_nodes()
        )));
    }
    Ok(())
}

/// Number of worker threads for row-parallel kernels. Controlled by the
/// MIXLAB_THREADS environment variable; defaults to 1 (serial).
pub fn kernel_threads() -> usize {
    std::env::var("MIXLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

/// out = A * H. Row i of the output accumulates weighted neighbor rows in
/// ascending neighbor order.
pub fn spmm<T: Real>(
    a: &CsrGraph,
    h: &FeatureMatrix<T>,
) -> Result<(FeatureMatrix<T>, KernelStats)> {
    let mask = Bitmask::ones(a.num_nodes(), h.cols());
    sspmm(a, h, &mask)
}

/// Fused masked multiply: out[i][j] = (A*H)[i][j] where mask[i][j] is set,
/// 0 elsewhere. Masked-out outputs are skipped entirely, which is where the
/// compute and traffic savings come from.
pub fn sspmm<T: Real>(
    a: &CsrGraph,
    h: &FeatureMatrix<T>,
    mask: &Bitmask,
) -> Result<(FeatureMatrix<T>, KernelStats)> {
    check_spmm_dims(a, h)?;
    if mask.rows() != a.num_nodes() || mask.cols() != h.cols() {
        return Err(Error::DimMismatch(format!(
            "mask {}x{} != output {}x{}",
            mask.rows(),
            mask.cols(),
            a.num_nodes(),
            h.cols()
        )));
    }
    let n = a.num_nodes();
    let cols = h.cols();
    let mut out = FeatureMatrix::zeros(n, cols);

    let threads = kernel_threads().min(n.max(1));
    let stats = if threads <= 1 || n == 0 {
        sspmm_rows(a, h, mask, &mut out, 0, n)
    } else {
        // Disjoint row chunks; per-chunk stats reduced in chunk order so the
        // result is identical to the serial run.
        let chunk = n.div_ceil(threads);
        let mut chunks: Vec<&mut [T]> = Vec::new();
        let mut rest: &mut [T] = &mut out.data;
        for _ in 0..threads {
            let take = (chunk * cols).min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            chunks.push(head);
            rest = tail;
        }
        let partials = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .enumerate()
                .map(|(c, slice)| {
                    scope.spawn(move || {
                        let lo = (c * chunk).min(n);
                        let hi = ((c + 1) * chunk).min(n);
                        sspmm_rows_into(a, h, mask, slice, lo, hi)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|j| j.join().unwrap())
                .collect::<Vec<_>>()
        });
        partials
            .into_iter()
            .fold(KernelStats::default(), |acc, s| acc + s)
    };
    Ok((out, stats))
}

fn sspmm_rows<T: Real>(
    a: &CsrGraph,
    h: &FeatureMatrix<T>,
    mask: &Bitmask,
    out: &mut FeatureMatrix<T>,
    lo: usize,
    hi: usize,
) -> KernelStats {
    let cols = h.cols();
    let slice = &mut out.data[lo * cols..hi * cols];
    sspmm_rows_into(a, h, mask, slice, lo, hi)
}

fn sspmm_rows_into<T: Real>(
    a: &CsrGraph,
    h: &FeatureMatrix<T>,
    mask: &Bitmask,
    out_slice: &mut [T],
    lo: usize,
    hi: usize,
) -> KernelStats {
    let cols = h.cols();
    let weighted = a.is_weighted();
    let mut stats = KernelStats::default();
    for i in lo..hi {
        let row = a.row(i);
        let nnz = row.len() as u64;
        let mut row_touched = false;
        let out_row = &mut out_slice[(i - lo) * cols..(i - lo + 1) * cols];
        for j in 0..cols {
            if !mask.get(i, j) {
                stats.outputs_skipped += 1;
                continue;
            }
            row_touched = true;
            let mut acc = T::ZERO;
            if weighted {
                for (k, w) in a.row_entries(i) {
                    acc += T::from_f64(w) * h.get(k, j);
                }
                stats.flops += 2 * nnz;
            } else {
                for &k in row {
                    acc += h.get(k, j);
                }
                stats.flops += nnz.saturating_sub(1);
            }
            // feature reads for this output element
            stats.bytes_read += nnz * T::BYTES;
            stats.bytes_written += T::BYTES;
            out_row[j] = acc;
        }
        if row_touched {
            // adjacency structure (and weights) read once per active row
            stats.bytes_read += nnz * INDEX_BYTES;
            if weighted {
                stats.bytes_read += nnz * WEIGHT_BYTES;
            }
        }
    }
    stats
}

/// Sampled dense-dense product: for each structural nonzero (i, j) of
/// `pattern`, the dot product of row i of `b` with row j of `c`. Values are
/// returned aligned with the pattern's column order.
pub fn sddmm<T: Real>(
    pattern: &CsrGraph,
    b: &FeatureMatrix<T>,
    c: &FeatureMatrix<T>,
) -> Result<Vec<T>> {
    let n = pattern.num_nodes();
    if b.rows() != n || c.rows() != n {
        return Err(Error::DimMismatch(format!(
            "operand rows {}/{} != pattern nodes {n}",
            b.rows(),
            c.rows()
        )));
    }
    if b.cols() != c.cols() {
        return Err(Error::DimMismatch(format!(
            "operand cols {} != {}",
            b.cols(),
            c.cols()
        )));
    }
    let mut values = Vec::with_capacity(pattern.nnz());
    for i in 0..n {
        for &j in pattern.row(i) {
            let mut acc = T::ZERO;
            for k in 0..b.cols() {
                acc += b.get(i, k) * c.get(j, k);
            }
            values.push(acc);
        }
    }
    Ok(values)
}

/// Dropout mask keyed by (seed, layer_tag, i, j): position-stable, so any
/// row or column slice of the matrix sees the same bits.
pub fn make_dropout_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    seed: u64,
    layer_tag: u64,
) -> Result<Bitmask> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidParam(format!(
            "dropout rate {rate} outside [0, 1)"
        )));
    }
    let mut m = Bitmask::zeros(rows, cols);
    if rate == 0.0 {
        return Ok(Bitmask::ones(rows, cols));
    }
    for i in 0..rows {
        for j in 0..cols {
            if dropout_bit(rate, seed, layer_tag, i, j) {
                m.set(i, j, true);
            }
        }
    }
    Ok(m)
}

/// Single dropout bit at (i, j); true means the element is kept.
#[inline]
pub fn dropout_bit(rate: f64, seed: u64, layer_tag: u64, i: usize, j: usize) -> bool {
    rate == 0.0 || prng::uniform(seed, stream::DROPOUT, &[layer_tag, i as u64, j as u64]) >= rate
}

/// Mask of strictly positive entries (the ReLU derivative pattern).
pub fn make_relu_mask<T: Real>(z: &FeatureMatrix<T>) -> Bitmask {
    let mut m = Bitmask::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            if z.get(i, j) > T::ZERO {
                m.set(i, j, true);
            }
        }
    }
    m
}
