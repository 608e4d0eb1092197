//! Rayon-backed path executor.

use gtwalk_core::exec::PathExecutor;
use rayon::prelude::*;

use crate::error::RunError;

/// Maps paths on a dedicated pool. Results come back in index order, so the
/// output does not depend on the number of workers.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Result<Self, RunError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| RunError::Threads(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl PathExecutor for RayonExecutor {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Worker count when neither `--threads` nor `GTWALK_THREADS` is given.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
