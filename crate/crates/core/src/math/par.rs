//! Worker pool shared by the batch-parallel kernels.
//!
//! `SPLIT_INR_THREADS` caps the number of workers; `0` or `1` runs serially.
//! Work is always partitioned into the same chunks regardless of the worker
//! count, so results do not depend on the degree of parallelism.

use std::sync::OnceLock;

use rayon::prelude::*;

pub const THREADS_ENV: &str = "SPLIT_INR_THREADS";

fn pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let available = std::thread::available_parallelism().map_or(1, |n| n.get());
        let threads = match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            Some(cap) => cap.min(available),
            None => available,
        };
        if threads <= 1 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()
    })
    .as_ref()
}

/// Number of workers the pool will use (1 when serial).
pub fn worker_count() -> usize {
    pool().map_or(1, |p| p.current_num_threads())
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match pool() {
        Some(p) if n > 1 => p.install(|| (0..n).into_par_iter().map(&f).collect()),
        _ => (0..n).map(f).collect(),
    }
}
