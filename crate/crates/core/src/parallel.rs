//! Deterministic chunked parallel map.
//!
//! Work is split into chunks whose boundaries depend only on the problem size,
//! never on the worker count. Per-chunk results come back in chunk order, so
//! any reduction done by the caller is bit-identical for 1 or N workers.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Number of worker threads used by an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(usize);

impl Workers {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self(1)
    }
}

/// Splits `0..n_items` into chunks of `chunk` items and maps `f` over them.
pub fn map_chunks<T, F>(n_items: usize, chunk: usize, workers: Workers, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    assert!(chunk > 0);
    let n_chunks = n_items.div_ceil(chunk);
    let range_of = |c: usize| c * chunk..((c + 1) * chunk).min(n_items);
    if workers.get() == 1 {
        return Ok((0..n_chunks).map(|c| f(range_of(c))).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.get())
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| f(range_of(c)))
            .collect()
    }))
}
