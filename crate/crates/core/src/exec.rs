//! Execution strategy for the data-parallel inner loops.
//!
//! Every parallel site in the crate follows the same pattern: work items
//! are indexed, each item is computed independently (with its own random
//! substream where randomness is involved), results land in an indexed
//! buffer, and reductions run afterwards in a fixed order. Sequential and
//! parallel runs are therefore bit-identical, which is what the
//! `--deterministic` CLI flag and the reproducibility tests rely on.
//!
//! Without the `parallel` cargo feature, [`RunMode::Parallel`] silently
//! degrades to the sequential implementation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Whether data-parallel loops fan out over rayon or run on one thread.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Sequential,
    #[default]
    Parallel,
}

/// Compute `f(0), ..., f(n-1)` into a vector, fanning out if requested.
pub fn map_indexed<T, F>(n: usize, mode: RunMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    match mode {
        RunMode::Sequential => (0..n).map(f).collect(),
        RunMode::Parallel => map_parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).map(f).collect()
}

/// Fill `rows` (a buffer of `n` rows of length `row_len`) by invoking
/// `f(i, row_i)` per row. Used for path matrices.
pub fn fill_rows<F>(rows: &mut [f64], row_len: usize, mode: RunMode, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    assert!(row_len > 0 && rows.len().is_multiple_of(row_len));
    match mode {
        RunMode::Sequential => {
            for (i, row) in rows.chunks_mut(row_len).enumerate() {
                f(i, row);
            }
        }
        RunMode::Parallel => fill_rows_parallel(rows, row_len, f),
    }
}

#[cfg(feature = "parallel")]
fn fill_rows_parallel<F>(rows: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    rows.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

#[cfg(not(feature = "parallel"))]
fn fill_rows_parallel<F>(rows: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    for (i, row) in rows.chunks_mut(row_len).enumerate() {
        f(i, row);
    }
}

/// Independent random substream `stream` of a master seed.
///
/// ChaCha keys 2^64 counter-based streams off one seed, so work item `i`
/// can draw from stream `i` regardless of which thread runs it; parallel
/// and serial runs then consume identical randomness.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sum in a fixed pairwise order, independent of how the addends were
/// produced. Pairwise summation also keeps rounding error at
/// O(log n) ulps instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
