//! Data-parallel execution helpers.
//!
//! Everything embarrassingly parallel in this crate (solver sweeps, Monte
//! Carlo batches, inequality-check batches, pair scans) funnels through
//! `map_indexed`, which runs on rayon when the `parallel` feature is enabled
//! and falls back to a plain loop otherwise. Results are collected by index,
//! so numbers are bit-identical no matter the thread count.

/// Maps `f` over `0..len`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Sequential reference implementation, kept unconditionally so benchmarks
/// can compare both paths within one build.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| (i as f64).sin();
        let a = map_indexed(1000, f);
        let b = map_indexed_seq(1000, f);
        assert_eq!(a, b);
    }
}
