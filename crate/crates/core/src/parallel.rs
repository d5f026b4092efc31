//! Worker pool shared by sweeps, quadrature nodes and trajectories.
//!
//! `DARKSIM_THREADS` caps the number of workers. Results are always returned
//! in input order, so reductions over them are deterministic.

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::ThreadPool;

pub const THREADS_ENV: &str = "DARKSIM_THREADS";

fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_limit() {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to start worker pool")
    })
}

/// Positive integer from `DARKSIM_THREADS`, if set and valid.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub(crate) fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    pool().install(|| items.par_iter().map(f).collect())
}
