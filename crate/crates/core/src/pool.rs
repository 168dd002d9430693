//! Scoped rayon pools with an explicit worker count.

/// Runs `f` inside a dedicated pool of `workers` threads (0 means rayon's default).
pub(crate) fn install<T, F>(workers: usize, f: F) -> T
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
