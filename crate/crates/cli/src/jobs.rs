//! Fan-out of independent jobs. Results come back in job order whatever
//! the scheduling, so the collector writes them deterministically.

#[cfg(feature = "parallel")]
pub fn fan_out<T: Send, R: Send>(jobs: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    jobs.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn fan_out<T: Send, R: Send>(jobs: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    jobs.into_iter().map(f).collect()
}

/// Sizes the global worker pool. Must run before any parallel work.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> Result<(), String> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(n: usize) -> Result<(), String> {
    if n == 1 {
        Ok(())
    } else {
        Err(format!("built without the `parallel` feature; --threads {n} is unavailable"))
    }
}

pub fn threads() -> usize {
    mixlab_core::par::worker_count()
}
