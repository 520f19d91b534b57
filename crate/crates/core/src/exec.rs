//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it every schedule runs sequentially. Results are
//! always collected in index order, so output never depends on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    #[default]
    Parallel,
}

impl Schedule {
    /// Whether this schedule actually runs on the thread pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Schedule::Parallel
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(schedule: Schedule, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if schedule.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = schedule;
    (0..n).map(f).collect()
}

/// Fill `out` in chunks of `chunk` elements; `f(chunk_index, chunk)`.
pub fn fill_chunks<T, F>(schedule: Schedule, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if schedule.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = schedule;
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Run `f` on a pool with `workers` threads (or the global pool for `None`).
/// Without the `parallel` feature this simply calls `f`.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}
