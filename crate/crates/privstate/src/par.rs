//! Parallel execution helpers.
//!
//! Every helper preserves determinism: parallel maps collect results in input
//! order and any floating-point reduction over those results happens
//! sequentially afterwards, so outputs are bit-identical across thread counts
//! and across the `parallel` feature being on or off.

/// How a batch of independent work items should be executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential execution.
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism::Rayon
    }
}

/// Map `f` over `items`, preserving input order in the output.
pub fn map_collect<T, U, F>(items: Vec<T>, mode: Parallelism, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match mode {
        Parallelism::Sequential => items.into_iter().map(f).collect(),
        Parallelism::Rayon => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                items.into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.into_iter().map(f).collect()
            }
        }
    }
}

/// Map `f` over `0..n`, preserving index order in the output.
pub fn indexed_map_collect<U, F>(n: usize, mode: Parallelism, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_collect((0..n).collect(), mode, f)
}
