//! Counter-based random streams.
//!
//! Work indexed by `0..n` is cut into fixed blocks of [`BLOCK_LEN`] items.
//! Each block draws from its own ChaCha8 stream keyed by the run seed with a
//! stream id derived from `(stream, block)`, so results depend only on
//! `(seed, stream, n)` and never on how blocks are scheduled across threads.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const BLOCK_LEN: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for block `block` of logical stream `stream` under `seed`.
pub fn block_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(splitmix64(stream) ^ block));
    rng
}

/// Runs `f` over every block of `0..n` (in parallel on the current rayon
/// pool) and returns the per-block results in block order.
pub fn map_blocks<T, F>(seed: u64, stream: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>, &mut ChaCha8Rng) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK_LEN);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_LEN;
            let end = (start + BLOCK_LEN).min(n);
            let mut rng = block_rng(seed, stream, b as u64);
            f(start..end, &mut rng)
        })
        .collect()
}

/// Running sum and sum of squares; merged in block order for bit-identical
/// totals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: &Moments) -> Moments {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn stderr(&self) -> f64 {
        let n = self.count as f64;
        if self.count < 2 {
            return f64::NAN;
        }
        let mean = self.mean();
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}
