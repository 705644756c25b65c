//! Data-parallel map helpers.
//!
//! All heavy inner loops (per-point network stages, per-pair batch gradients,
//! per-episode evaluation, finite-difference sweeps) are expressed as an
//! index-to-value map. [`map_indexed`] runs it on rayon when the `parallel`
//! feature is enabled and falls back to a plain iterator otherwise; results
//! come back in index order either way, so any reduction done on the returned
//! vector is deterministic. [`map_indexed_seq`] is always sequential and
//! exists so the bench suite can compare both paths in one build.

/// Map `0..n` through `f`, in parallel when the `parallel` feature is on.
/// The output vector is ordered by index regardless of scheduling.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant, kept callable under every feature set.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
