//! Counter-based deterministic randomness.
//!
//! Everything random in this crate (graph generation, weight init, dropout
//! masks, random partitions) is derived by hashing `(seed, stream tag,
//! indices...)` with a SplitMix64-style finalizer. Values are position-stable:
//! they depend only on the logical coordinates, never on evaluation order or
//! on how work is partitioned across workers. That is what makes the
//! distributed simulations reproduce the single-process reference exactly.

/// Named sub-streams so one `--seed` drives independent random sources.
pub mod stream {
    pub const GRAPH: u64 = 0x01;
    pub const WEIGHTS: u64 = 0x02;
    pub const DROPOUT: u64 = 0x03;
    pub const PARTITION: u64 = 0x04;
    pub const FEATURES: u64 = 0x05;
    pub const LABELS: u64 = 0x06;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Hash a sequence of words into one. Order-sensitive.
#[inline]
pub fn hash(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x6A09_E667_F3BC_C909; // arbitrary nonzero start
    for &p in parts {
        h = mix64(h.rotate_left(23) ^ p);
    }
    h
}

/// Map a hash to the unit interval [0, 1) with 53 bits of precision.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform f64 in [0, 1) keyed by the given coordinates.
#[inline]
pub fn uniform(seed: u64, tag: u64, coords: &[u64]) -> f64 {
    let mut parts = Vec::with_capacity(coords.len() + 2);
    parts.push(seed);
    parts.push(tag);
    parts.extend_from_slice(coords);
    unit_f64(hash(&parts))
}

/// Hash keyed by coordinates, as a raw u64.
#[inline]
pub fn keyed(seed: u64, tag: u64, coords: &[u64]) -> u64 {
    let mut parts = Vec::with_capacity(coords.len() + 2);
    parts.push(seed);
    parts.push(tag);
    parts.extend_from_slice(coords);
    hash(&parts)
}

/// Small stateful generator for sequential draws (graph generators).
/// Just a counter over the keyed hash, so replaying is trivial.
#[derive(Debug, Clone)]
pub struct Counter {
    seed: u64,
    tag: u64,
    count: u64,
}

impl Counter {
    pub fn new(seed: u64, tag: u64) -> Self {
        Self {
            seed,
            tag,
            count: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let h = hash(&[self.seed, self.tag, self.count]);
        self.count += 1;
        h
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform integer in [0, bound) by rejection-free multiply-shift.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}
