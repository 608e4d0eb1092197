//! Path-level map over Monte Carlo path indices.
//!
//! Implementations must return results in index order. All reductions in this
//! crate fold the returned vector front to back, so a report depends only on
//! the per-path results and never on how the map was scheduled.

use alloc::vec::Vec;

pub trait PathExecutor {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every path on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PathExecutor for Sequential {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
