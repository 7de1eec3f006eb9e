//! Bounded worker pool for independent jobs.

use anyhow::Result;

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "SSC_WORKERS";

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn configured_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => anyhow::bail!("{WORKERS_ENV} must be a positive integer, got '{v}'"),
        },
    }
}

/// Computes `f(i)` for every job index; results come back in index order
/// whatever order the workers finish in.
#[cfg(feature = "parallel")]
pub fn run_jobs<T, F>(len: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_workers()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| (0..len).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
pub fn run_jobs<T, F>(len: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> T,
{
    configured_workers()?;
    Ok((0..len).map(f).collect())
}
