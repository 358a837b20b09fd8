//! Data-parallel helpers with a sequential fallback when the `parallel`
//! feature is off. Results are always returned in input order.

/// Maps `f` over `items`, on the rayon pool when `parallel` is set and the
/// feature is compiled in.
pub fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        assert_eq!(super::map(&xs, true, |x| x * 2), super::map(&xs, false, |x| x * 2));
    }
}
