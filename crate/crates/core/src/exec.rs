//! Data-parallel map helpers.
//!
//! Independent jobs (tomography inputs, sweep points, time-grid chunks) go
//! through [`map_collect`]. With the `parallel` feature it fans out on the
//! rayon pool; without it the same closure runs sequentially. Results are
//! collected in input order, so output is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential reference implementation, always available (benchmarks compare
/// it against the parallel path).
pub fn map_collect_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map_collect(xs.clone(), |x| x * x);
        let seq = map_collect_seq(xs, |x| x * x);
        assert_eq!(par, seq);
    }
}
