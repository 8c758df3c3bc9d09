//! Order-preserving map helpers shared by the data-parallel inner loops.
//!
//! Reductions never happen inside the parallel stage: callers map into a
//! `Vec` (input order) and fold sequentially, so results are bit-identical
//! with and without the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_collect`], kept available in both feature
/// modes so benchmarks can compare the two paths in one build.
pub(crate) fn map_collect_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn try_map_collect<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn try_map_collect<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    F: Fn(&T) -> Result<R, E>,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_input_order() {
        let items: Vec<u64> = (0..1000).collect();
        let fancy = map_collect(&items, |x| x * 3 + 1);
        let plain = map_collect_seq(&items, |x| x * 3 + 1);
        assert_eq!(fancy, plain);
    }

    #[test]
    fn try_map_collect_propagates_first_error() {
        let items: Vec<u64> = (0..10).collect();
        let out: Result<Vec<u64>, String> =
            try_map_collect(&items, |x| if *x == 7 { Err("seven".into()) } else { Ok(*x) });
        assert_eq!(out, Err("seven".to_string()));
    }
}
