//! Deterministic parallel map over fixed work chunks.
//!
//! Work is cut into chunks whose boundaries depend only on the problem size,
//! each chunk is computed independently, and results come back in chunk
//! order. Sequential folds over the result are then identical for any
//! number of threads.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Environment variable overriding the default thread count.
pub const THREADS_VAR: &str = "RCMLAB_THREADS";

/// Walkers per chunk for Monte Carlo loops.
pub const WALKER_CHUNK: u64 = 1000;

pub struct Driver {
    pool: rayon::ThreadPool,
}

impl Driver {
    /// `threads = None` reads `RCMLAB_THREADS`, then falls back to the
    /// number of available cores.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let threads = match threads {
            Some(t) => t,
            None => match std::env::var(THREADS_VAR) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| LabError::config(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?,
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        if threads == 0 {
            return Err(LabError::config("thread count must be positive"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LabError::Pool(e.to_string()))?;
        Ok(Driver { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f(0), ..., f(n-1)` in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }

    /// Like [`Self::map`] for fallible work; the first error by index wins.
    pub fn try_map<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Split `0..total` into chunks of `chunk` and map each.
    pub fn map_chunks<T, F>(&self, total: u64, chunk: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<u64>) -> T + Sync + Send,
    {
        let chunks = chunk_ranges(total, chunk);
        self.pool.install(|| chunks.into_par_iter().map(&f).collect())
    }

    pub fn try_map_chunks<T, F>(&self, total: u64, chunk: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Range<u64>) -> Result<T> + Sync + Send,
    {
        self.map_chunks(total, chunk, f).into_iter().collect()
    }
}

pub fn chunk_ranges(total: u64, chunk: u64) -> Vec<Range<u64>> {
    let chunk = chunk.max(1);
    (0..total.div_ceil(chunk)).map(|i| i * chunk..((i + 1) * chunk).min(total)).collect()
}
