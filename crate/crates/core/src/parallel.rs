//! Worker-pool control. Every parallel reduction in the crate is either an
//! integer sum or an order-independent max, so results do not depend on the
//! worker count.

use rayon::ThreadPoolBuilder;

/// Run `f` on a pool of `workers` threads, or on the global pool for `None`.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => f(),
        Some(w) => ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

pub fn available_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
