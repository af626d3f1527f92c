//! Row-parallel evaluation with a sequential fallback.
//!
//! Every row is computed independently and collected in index order, so the
//! result is bitwise identical whichever execution mode is used.

/// How independent rows are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over rows. Without the `parallel` feature this
    /// behaves like [`Execution::Sequential`].
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map_rows<T, F>(rows: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..rows).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..rows).map(f).collect()
}

/// Thread cap from `FRAC_KANSA_THREADS` (`0` or unset means automatic).
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var("FRAC_KANSA_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run `f` inside a pool honouring `FRAC_KANSA_THREADS`.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = thread_cap_from_env() {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    f()
}
