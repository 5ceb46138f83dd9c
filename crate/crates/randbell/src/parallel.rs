//! Thread-pool executor for trial runs.

use std::num::NonZeroUsize;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use randbell_core::experiments::Executor;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "RANDBELL_THREADS";

/// Worker count from `RANDBELL_THREADS`, falling back to the number of
/// available cores. Unparsable or zero values are ignored.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<NonZeroUsize>().ok())
        .or_else(|| std::thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get)
}

/// Runs work items on a dedicated rayon pool. Results come back in index
/// order, so output does not depend on the number of threads.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// Builds a pool with `threads` workers.
    pub fn new(threads: usize) -> std::io::Result<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .thread_name(|i| format!("randbell-{i}"))
            .build()
            .map_err(std::io::Error::other)?;
        Ok(Self { pool })
    }

    /// Number of workers.
    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map_indices<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use randbell_core::experiments::Sequential;

    #[test]
    fn order_is_preserved() {
        let p = Parallel::new(4).unwrap();
        assert_eq!(p.threads(), 4);
        let par = p.map_indices(10_000, |i| i * i);
        assert_eq!(par, Sequential.map_indices(10_000, |i| i * i));
    }
}
