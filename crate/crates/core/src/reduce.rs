//! Reductions whose result does not depend on the thread count.
//!
//! Work is cut into fixed-size chunks; each chunk is folded sequentially and the
//! partial results are combined pairwise in chunk order.

use rayon::prelude::*;

pub const CHUNK: usize = 4096;

fn tree_combine(mut parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; len];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().expect("one part")
}

/// Accumulates `f(i, acc)` for `i in 0..n` into a vector of length `len`.
pub fn chunked_fold<F>(n: usize, len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    tree_combine(parts, len)
}

/// `sum_{i < n} f(i)`.
pub fn chunked_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    chunked_fold(n, 1, |i, acc| acc[0] += f(i))[0]
}

/// `min_{i < n} f(i)`, `+inf` when empty.
pub fn chunked_min<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).reduce(|| f64::INFINITY, f64::min)
}

/// `max_{i < n} f(i)`, `-inf` when empty.
pub fn chunked_max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).reduce(|| f64::NEG_INFINITY, f64::max)
}
