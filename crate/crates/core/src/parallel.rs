//! Chunked map-reduce over index ranges, optionally on a rayon pool.
//!
//! Work is split into fixed-size chunks so the per-chunk results never depend
//! on the worker count. With `ordered` set, chunk results are combined left to
//! right; otherwise the pool may associate them in any order.

use std::ops::Range;

pub(crate) fn chunked_reduce<T, F, M>(
    n: usize,
    chunk: usize,
    ordered: bool,
    fold: F,
    merge: M,
) -> Option<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
    M: Fn(T, T) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let range = move |c: usize| c * chunk..((c + 1) * chunk).min(n);

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if ordered {
            let parts: Vec<T> = (0..n_chunks).into_par_iter().map(|c| fold(range(c))).collect();
            parts.into_iter().reduce(merge)
        } else {
            (0..n_chunks)
                .into_par_iter()
                .map(|c| fold(range(c)))
                .reduce_with(merge)
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = ordered;
        (0..n_chunks).map(|c| fold(range(c))).reduce(merge)
    }
}

/// Runs `f` on a pool with `workers` threads (`None`: library default).
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = workers {
            match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                Ok(pool) => return pool.install(f),
                Err(e) => log::warn!("could not build a {n}-thread pool ({e}); using the global pool"),
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
