//! Thin dispatch layer between the rayon data-parallel code path and
//! the sequential fallback (feature `parallel`).
//!
//! All reductions collect into index-ordered buffers and sum
//! sequentially, so results are bit-identical with and without the
//! feature enabled.

/// Map over indices 0..n, order-preserving.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_indexed_seq_or_par(n, f)
}

#[cfg(feature = "parallel")]
fn map_indexed_seq_or_par<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed_seq_or_par<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation, always available (used by the
/// benchmark suite to compare against the parallel path).
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Deterministic sum of per-index contributions: parallel map, then a
/// fixed-order sequential reduction.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_sums_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.1).sin() / (1.0 + i as f64);
        let a = sum_indexed(10_000, f);
        let b: f64 = map_indexed_seq(10_000, f).into_iter().sum();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
