//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature the mappers fan out over rayon while
//! preserving input order, so results are identical to the sequential path.
//! Building with `--no-default-features` drops the rayon dependency entirely.

#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Always-sequential mapper; benchmark baseline and `--jobs 1` path.
pub fn map_sequential<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = map_ordered(&items, |x| x * x);
        let b = map_sequential(&items, |x| x * x);
        assert_eq!(a, b);
    }
}
