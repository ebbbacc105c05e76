//! Data-parallel execution helpers with a sequential fallback.
//!
//! Every reduction here uses a fixed pairwise tree (split at the midpoint,
//! sequential fold below [`SEQ_BLOCK`]), so the floating-point result does
//! not depend on how many threads execute it. Elementwise maps write
//! disjoint output slots and are trivially reproducible. With the `parallel`
//! feature disabled the same trees are walked sequentially and produce the
//! same bits.

use std::sync::atomic::{AtomicBool, Ordering};

/// Below this length a reduction folds sequentially.
const SEQ_BLOCK: usize = 1024;

/// Minimum slice length before parallel dispatch pays for itself.
pub const PAR_MIN_LEN: usize = 8192;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential code path even when the `parallel` feature is on.
///
/// Used by the benches to compare both execution modes in one binary and by
/// the determinism tests to verify bit-identical output.
pub fn set_sequential_override(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::Relaxed);
}

pub fn sequential_override() -> bool {
    FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

#[inline]
fn go_parallel(len: usize) -> bool {
    cfg!(feature = "parallel") && len >= PAR_MIN_LEN && !sequential_override()
}

/// Pairwise sum with a fixed reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if go_parallel(xs.len()) {
        #[cfg(feature = "parallel")]
        return par_sum(xs);
    }
    seq_sum(xs)
}

/// Sequential pairwise sum; same tree as [`pairwise_sum`].
pub fn seq_sum(xs: &[f64]) -> f64 {
    if xs.len() <= SEQ_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    seq_sum(&xs[..mid]) + seq_sum(&xs[mid..])
}

#[cfg(feature = "parallel")]
fn par_sum(xs: &[f64]) -> f64 {
    if xs.len() <= SEQ_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    let (a, b) = rayon::join(|| par_sum(&xs[..mid]), || par_sum(&xs[mid..]));
    a + b
}

/// `(min, max)` over a slice. Empty input yields `(inf, -inf)`.
pub fn min_max(xs: &[f64]) -> (f64, f64) {
    if go_parallel(xs.len()) {
        #[cfg(feature = "parallel")]
        return par_min_max(xs);
    }
    seq_min_max(xs)
}

fn seq_min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

#[cfg(feature = "parallel")]
fn par_min_max(xs: &[f64]) -> (f64, f64) {
    if xs.len() <= SEQ_BLOCK {
        return seq_min_max(xs);
    }
    let mid = xs.len() / 2;
    let (a, b) = rayon::join(|| par_min_max(&xs[..mid]), || par_min_max(&xs[mid..]));
    (a.0.min(b.0), a.1.max(b.1))
}

/// Maximum of a slice; `-inf` for empty input.
pub fn max(xs: &[f64]) -> f64 {
    min_max(xs).1
}

pub fn all_finite(xs: &[f64]) -> bool {
    #[cfg(feature = "parallel")]
    if go_parallel(xs.len()) {
        use rayon::prelude::*;
        return xs.par_chunks(SEQ_BLOCK).all(|c| c.iter().all(|v| v.is_finite()));
    }
    xs.iter().all(|v| v.is_finite())
}

/// Fill `out` by chunks: `f(start, chunk)` computes `out[start..start+chunk.len()]`.
///
/// Each element is a pure function of its index, so the execution mode cannot
/// change the result.
pub fn fill_chunked<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    #[cfg(feature = "parallel")]
    if go_parallel(out.len()) {
        use rayon::prelude::*;
        let chunk = SEQ_BLOCK;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(k, c)| f(k * chunk, c));
        return;
    }
    f(0, out);
}

/// Map-reduce over index chunks with an associative, commutative combiner
/// (used for maxima; safe under any execution order).
pub fn reduce_chunked<F>(len: usize, init: f64, f: F, combine: fn(f64, f64) -> f64) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    if go_parallel(len) {
        use rayon::prelude::*;
        let chunk = SEQ_BLOCK;
        let n_chunks = len.div_ceil(chunk);
        return (0..n_chunks)
            .into_par_iter()
            .map(|k| f(k * chunk, (k * chunk + chunk).min(len)))
            .fold(|| init, combine)
            .reduce(|| init, combine);
    }
    combine(init, f(0, len))
}

/// `(0..n).map(f)` collected in index order. Parallel when `n >= min_par_len`
/// and the parallel mode is active; order of the result never changes.
pub fn map_indexed<T, F>(n: usize, min_par_len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if cfg!(feature = "parallel") && n >= min_par_len && !sequential_override() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = min_par_len;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_sequential_tree() {
        let xs: Vec<f64> = (0..200_000).map(|i| ((i * 2654435761u64 as usize) % 1000) as f64 * 1e-3 - 0.3).collect();
        let s_seq = seq_sum(&xs);
        let s = pairwise_sum(&xs);
        assert_eq!(s.to_bits(), s_seq.to_bits());
    }

    #[test]
    fn sequential_override_roundtrip() {
        set_sequential_override(true);
        assert!(sequential_override());
        set_sequential_override(false);
        assert!(!sequential_override());
    }

    #[test]
    fn min_max_small() {
        let (lo, hi) = min_max(&[3.0, -1.5, 2.0]);
        assert_eq!(lo, -1.5);
        assert_eq!(hi, 3.0);
    }
}
