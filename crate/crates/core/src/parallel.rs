//! Rollout execution backends.
//!
//! Work is split per rollout and every rollout owns its noise stream and its
//! output slot, so the backend never changes results. Reductions over
//! rollouts happen afterwards in index order on the calling thread.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Default)]
pub enum Backend {
    /// Plain loop on the calling thread.
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    /// Rayon, either on the global pool or on a dedicated one.
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
    #[cfg(feature = "parallel")]
    Pool(Arc<rayon::ThreadPool>),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Sequential => write!(f, "Sequential"),
            #[cfg(feature = "parallel")]
            Backend::Parallel => write!(f, "Parallel"),
            #[cfg(feature = "parallel")]
            Backend::Pool(pool) => write!(f, "Pool({} threads)", pool.current_num_threads()),
        }
    }
}

impl Backend {
    /// A backend with exactly `workers` threads. `workers <= 1` is sequential;
    /// without the `parallel` feature every request is sequential.
    pub fn with_workers(workers: usize) -> Self {
        #[cfg(feature = "parallel")]
        {
            if workers > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to build rollout thread pool");
                return Backend::Pool(Arc::new(pool));
            }
        }
        let _ = workers;
        Backend::Sequential
    }

    pub fn workers(&self) -> usize {
        match self {
            Backend::Sequential => 1,
            #[cfg(feature = "parallel")]
            Backend::Parallel => rayon::current_num_threads(),
            #[cfg(feature = "parallel")]
            Backend::Pool(pool) => pool.current_num_threads(),
        }
    }

    /// Calls `f(i, row_i, item_i)` for every row of `rows` (rows have length
    /// `width`) together with the matching element of `items`.
    pub fn for_each_row<A, B, F>(&self, rows: &mut [A], width: usize, items: &mut [B], f: F)
    where
        A: Send,
        B: Send,
        F: Fn(usize, &mut [A], &mut B) + Send + Sync,
    {
        assert_eq!(rows.len(), width * items.len(), "row/item count mismatch");
        if width == 0 {
            items
                .iter_mut()
                .enumerate()
                .for_each(|(i, item)| f(i, &mut [], item));
            return;
        }
        match self {
            Backend::Sequential => rows
                .chunks_mut(width)
                .zip(items.iter_mut())
                .enumerate()
                .for_each(|(i, (row, item))| f(i, row, item)),
            #[cfg(feature = "parallel")]
            Backend::Parallel => par_rows(rows, width, items, &f),
            #[cfg(feature = "parallel")]
            Backend::Pool(pool) => pool.install(|| par_rows(rows, width, items, &f)),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_rows<A, B, F>(rows: &mut [A], width: usize, items: &mut [B], f: &F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut B) + Send + Sync,
{
    rows.par_chunks_mut(width)
        .zip(items.par_iter_mut())
        .enumerate()
        .for_each(|(i, (row, item))| f(i, row, item));
}
