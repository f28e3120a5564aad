//! Trial-level data parallelism. Results always come back in trial-index
//! order, so aggregation is identical for any worker count.

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "EKBF_THREADS";

/// Worker count from `EKBF_THREADS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Evaluates `f(0), …, f(n − 1)` and returns the results in index order.
#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let workers = worker_count();
    if workers <= 1 {
        return map_trials_sequential(n, f);
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => map_trials_sequential(n, f),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_trials_sequential(n, f)
}

/// Single-threaded reference path.
pub fn map_trials_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
