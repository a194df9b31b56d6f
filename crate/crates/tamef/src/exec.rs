//! Rayon-backed [`Executor`]; results come back in index order so outputs
//! do not depend on the thread count.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use tamef_core::exec::Executor;

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "TAMEF_THREADS";

pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` lets rayon choose.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(RayonExecutor { pool: ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    /// Pool sized by `TAMEF_THREADS` when set to a positive integer.
    pub fn from_env() -> Result<Self, rayon::ThreadPoolBuildError> {
        let threads = std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0);
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map_indexed<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }
}
