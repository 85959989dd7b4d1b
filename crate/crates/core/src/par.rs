//! Minimal parallel-map helper: index-ordered results so that reductions
//! stay deterministic regardless of thread count or feature flags.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order. Runs on the
/// rayon pool when the `parallel` feature is enabled, sequentially
/// otherwise; the output is identical either way.
pub(crate) fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
