//! Fixed-size chunking over samples.
//!
//! Every data-parallel pass splits the sample range into chunks of
//! [`CHUNK`] samples and reduces the per-chunk results in chunk order. The
//! partition does not depend on the number of workers, so sequential and
//! parallel builds produce bit-identical floating point results.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) const CHUNK: usize = 1024;

/// Applies `f` to each chunk range of `0..n` and returns results in chunk order.
pub(crate) fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let range = move |c: usize| c * CHUNK..((c + 1) * CHUNK).min(n);
    #[cfg(feature = "parallel")]
    {
        (0..chunks).into_par_iter().map(|c| f(range(c))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..chunks).map(|c| f(range(c))).collect()
    }
}

/// Zips three equally long per-sample slices chunk-wise. `f` receives the
/// offset of the chunk's first sample.
pub(crate) fn zip3_chunks_mut<A, B, C, T, F>(a: &mut [A], b: &mut [B], c: &mut [C], f: F) -> Vec<T>
where
    A: Send,
    B: Send,
    C: Send,
    T: Send,
    F: Fn(usize, &mut [A], &mut [B], &mut [C]) -> T + Sync + Send,
{
    debug_assert!(a.len() == b.len() && b.len() == c.len());
    #[cfg(feature = "parallel")]
    {
        a.par_chunks_mut(CHUNK)
            .zip(b.par_chunks_mut(CHUNK))
            .zip(c.par_chunks_mut(CHUNK))
            .enumerate()
            .map(|(i, ((a, b), c))| f(i * CHUNK, a, b, c))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        a.chunks_mut(CHUNK)
            .zip(b.chunks_mut(CHUNK))
            .zip(c.chunks_mut(CHUNK))
            .enumerate()
            .map(|(i, ((a, b), c))| f(i * CHUNK, a, b, c))
            .collect()
    }
}

/// Runs `f` on a pool with `workers` threads (0 = the global pool).
pub(crate) fn with_workers<T: Send>(
    workers: usize,
    f: impl FnOnce() -> T + Send,
) -> crate::Result<T> {
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| crate::Error::ThreadPool(e.to_string()))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(f())
    }
}
