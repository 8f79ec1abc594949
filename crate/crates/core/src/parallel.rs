//! Ordered chunked map with a rayon backend and a sequential fallback.
//!
//! Results always come back in input order and the first error is the one
//! with the lowest chunk offset, so the worker count never changes output.

/// Worker count plus batch granularity for chunked work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exec {
    pub jobs: usize,
    pub batch_size: usize,
}

pub const DEFAULT_BATCH_SIZE: usize = 512;

impl Default for Exec {
    fn default() -> Self {
        Self {
            jobs: default_jobs(),
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Self {
            jobs: 1,
            ..Self::default()
        }
    }

    pub fn with_jobs(jobs: usize) -> Self {
        Self {
            jobs: jobs.max(1),
            ..Self::default()
        }
    }

    /// Applies `f(offset, chunk)` to consecutive chunks and concatenates the
    /// outputs in order.
    pub fn map_chunks<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(usize, &[T]) -> Result<Vec<R>, E> + Sync,
    {
        let size = self.batch_size.max(1);
        if self.jobs <= 1 || items.len() <= size {
            return map_chunks_sequential(items, size, f);
        }
        #[cfg(feature = "parallel")]
        {
            map_chunks_parallel(items, size, self.jobs, f)
        }
        #[cfg(not(feature = "parallel"))]
        {
            map_chunks_sequential(items, size, f)
        }
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

pub fn map_chunks_sequential<T, R, E, F>(items: &[T], size: usize, f: F) -> Result<Vec<R>, E>
where
    F: Fn(usize, &[T]) -> Result<Vec<R>, E>,
{
    let mut out = Vec::with_capacity(items.len());
    for (ci, chunk) in items.chunks(size).enumerate() {
        out.extend(f(ci * size, chunk)?);
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
pub fn map_chunks_parallel<T, R, E, F>(
    items: &[T],
    size: usize,
    jobs: usize,
    f: F,
) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &[T]) -> Result<Vec<R>, E> + Sync,
{
    use rayon::prelude::*;

    let run = || -> Vec<Result<Vec<R>, E>> {
        items
            .par_chunks(size)
            .enumerate()
            .map(|(ci, chunk)| f(ci * size, chunk))
            .collect()
    };
    let parts = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(run),
        // fall back to the global pool if a dedicated one cannot be spawned
        Err(_) => run(),
    };
    let mut out = Vec::with_capacity(items.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}
