//! Data-parallel facade.
//!
//! With the `parallel` feature (default) the helpers fan work out over
//! rayon; without it they degrade to plain sequential loops. Results are
//! collected in index order either way, so callers that reduce over the
//! returned vector get bit-identical output regardless of thread count.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Run `f` under a thread cap. `None` uses the default pool (hardware
/// concurrency); `Some(k)` builds a scoped k-thread pool. Without the
/// `parallel` feature the cap is irrelevant and `f` runs inline.
#[cfg(feature = "parallel")]
pub fn with_thread_cap<R, F>(cap: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match cap {
        Some(k) if k >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("failed to build thread pool")
            .install(f),
        _ => f(),
    }
}

/// Run `f` under a thread cap (sequential build: always inline).
#[cfg(not(feature = "parallel"))]
pub fn with_thread_cap<R, F>(cap: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let _ = cap;
    f()
}
