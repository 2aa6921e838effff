//! Order-preserving parallel map over an explicit worker count.

use rayon::prelude::*;

use crate::error::Result;

/// Applies `f(index, item)` on `workers` threads and returns results in
/// input order. The first error in input order wins.
pub fn map_indexed<T, R, F>(workers: usize, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync + Send,
{
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, t)| f(i, t))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .collect()
}
