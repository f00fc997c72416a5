//! Row-block reductions.
//!
//! Rows are cut into fixed-size blocks, each block is folded sequentially and
//! the per-block partials are combined in a fixed pairwise tree. The block
//! layout never depends on the number of worker threads, so floating-point
//! sums come out bit-identical whether the `parallel` feature is on or off
//! and whatever the pool size.

use std::ops::Range;

/// Rows per block.
pub const BLOCK_ROWS: usize = 1024;

fn blocks(n: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    (0..n.div_ceil(BLOCK_ROWS)).map(move |b| b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(n))
}

/// Fold each block with `fold`, then combine the partials pairwise.
///
/// Returns `None` when `n == 0`.
pub fn block_reduce<T, F, C>(n: usize, fold: F, combine: C) -> Option<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
    C: Fn(T, T) -> T,
{
    let partials = map_blocks(n, fold);
    tree_combine(partials, combine)
}

#[cfg(feature = "parallel")]
fn map_blocks<T, F>(n: usize, fold: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let ranges: Vec<Range<usize>> = blocks(n).collect();
    ranges.into_par_iter().map(fold).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_blocks<T, F>(n: usize, fold: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    blocks(n).map(fold).collect()
}

/// Sequential version of [`block_reduce`], always available.
pub fn block_reduce_seq<T, F, C>(n: usize, fold: F, combine: C) -> Option<T>
where
    F: Fn(Range<usize>) -> T,
    C: Fn(T, T) -> T,
{
    tree_combine(blocks(n).map(fold).collect(), combine)
}

fn tree_combine<T, C>(mut level: Vec<T>, combine: C) -> Option<T>
where
    C: Fn(T, T) -> T,
{
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        level = next;
    }
    level.pop()
}

/// Apply `f` to every index, possibly in parallel, preserving order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Element-wise sum of two equally sized vectors, reusing the left one.
pub fn add_vecs(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_reduces_to_none() {
        assert!(block_reduce(0, |r| r.len(), |a, b| a + b).is_none());
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin() * 1e3).collect();
        let fold = |r: Range<usize>| xs[r].iter().sum::<f64>();
        let a = block_reduce(xs.len(), fold, |a, b| a + b).unwrap();
        let b = block_reduce_seq(xs.len(), fold, |a, b| a + b).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn counts_every_row_once() {
        for n in [1, 1023, 1024, 1025, 5000] {
            let total = block_reduce(n, |r| r.len(), |a, b| a + b).unwrap();
            assert_eq!(total, n);
        }
    }
}
