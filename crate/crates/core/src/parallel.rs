//! Data-parallel helpers with a sequential path.
//!
//! With the `parallel` feature the `parallel` argument selects rayon or a
//! plain loop at run time; without it every call runs sequentially.

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Whether the parallel path is compiled in.
pub const fn available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    #[test]
    fn both_paths_agree() {
        let v: Vec<u64> = (0..1000).collect();
        assert_eq!(super::map(&v, true, |x| x * 2), super::map(&v, false, |x| x * 2));
        assert_eq!(super::map_range(10, true, |i| i), (0..10).collect::<Vec<_>>());
    }
}
