//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper here assigns each output row (or index) to exactly one closure
//! call, so results do not depend on scheduling. With the `parallel` feature
//! disabled, or for inputs below [`PAR_MIN_ELEMS`], the plain iterator is used.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many touched elements the rayon dispatch costs more than it saves.
pub const PAR_MIN_ELEMS: usize = 1 << 14;

/// True when the crate was built with rayon support.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Calls `f(row_index, row)` for each `row_len`-sized chunk of `data`.
pub fn for_each_row_mut<F>(data: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    if row_len == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if data.len() >= PAR_MIN_ELEMS {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Collects `f(i)` for `i in 0..len`. `work_hint` is the approximate number of
/// scalar operations per call and decides whether to go parallel.
pub fn map_indices<T, F>(len: usize, work_hint: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if len > 1 && len.saturating_mul(work_hint) >= PAR_MIN_ELEMS {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = work_hint;
    (0..len).map(f).collect()
}

/// Like [`map_indices`] but always parallel when the feature is on. Used for
/// coarse independent jobs (k-means restarts, benchmark trials).
pub fn map_jobs<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}
