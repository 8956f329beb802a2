//! Batch mapping helpers with a feature-switched backend.
//!
//! With the default `parallel` feature the maps run on rayon's global
//! pool; without it they are plain sequential loops. Both versions return
//! results in input order and are bit-identical for deterministic
//! workloads — the batches this crate parallelizes (gradient checks,
//! multi-seed training, per-sequence evaluation) never share mutable
//! state across items.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting in order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fallible [`map_indexed`]; any item's error aborts the batch.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Map `f` over a slice, collecting in order.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Fallible [`map_slice`].
pub fn try_map_slice<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Which backend this build uses; lets reports record it.
pub fn backend() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_preserve_order() {
        let v = map_indexed(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);

        let items: Vec<i64> = (0..50).collect();
        let doubled = map_slice(&items, |x| x * 2);
        assert_eq!(doubled, (0..50).map(|x| x * 2).collect::<Vec<i64>>());
    }

    #[test]
    fn try_map_propagates_errors() {
        let ok: Result<Vec<usize>, String> = try_map_indexed(10, Ok);
        assert_eq!(ok.unwrap().len(), 10);
        let err: Result<Vec<usize>, String> =
            try_map_indexed(10, |i| if i == 3 { Err("boom".to_string()) } else { Ok(i) });
        assert_eq!(err.unwrap_err(), "boom");
    }
}
