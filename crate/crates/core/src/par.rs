//! Chunked map that runs on rayon when the `parallel` feature is enabled.
//!
//! Results are always returned in chunk order, so any reduction performed by
//! the caller is independent of scheduling.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive chunks of `items` of length `chunk`.
#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_chunks(chunk.max(1)).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    F: Fn(&[T]) -> R,
{
    items.chunks(chunk.max(1)).map(f).collect()
}
