//! Batch fan-out. With the `parallel` feature the closures run on rayon;
//! without it they run in order. Results keep input order either way, and
//! every item's outcome is returned so a batch can report all failures
//! rather than the first.

use crate::error::CliError;

#[cfg(feature = "parallel")]
pub fn map_results<T, U, E, F>(items: &[T], f: F) -> Vec<Result<U, E>>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Send + Sync,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_results<T, U, E, F>(items: &[T], f: F) -> Vec<Result<U, E>>
where
    F: Fn(&T) -> Result<U, E>,
{
    items.iter().map(f).collect()
}

/// Runs `f` under a worker cap. 0 keeps the default pool; without the
/// `parallel` feature the cap is meaningless and `f` just runs.
#[cfg(feature = "parallel")]
pub fn with_parallelism<R, F>(threads: usize, f: F) -> Result<R, CliError>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("parallelism {threads}: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_parallelism<R, F>(_threads: usize, f: F) -> Result<R, CliError>
where
    F: FnOnce() -> R,
{
    Ok(f())
}
