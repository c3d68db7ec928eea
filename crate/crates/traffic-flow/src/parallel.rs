//! Data-parallel building blocks with a sequential fallback.
//!
//! With the `parallel` feature (default) the per-cell loops of the solver
//! and the batch runners fan out over rayon; without it the same helpers
//! run sequentially. Outputs are bitwise identical either way: maps are
//! order-preserving and the only reduction is `f64::max`, which does not
//! depend on evaluation order.

/// Below this size the rayon dispatch overhead outweighs the work.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 4096;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if n < PAR_THRESHOLD {
        (0..n).map(f).collect()
    } else {
        (0..n)
            .into_par_iter()
            .with_min_len(PAR_THRESHOLD / 2)
            .map(f)
            .collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] but without the size threshold, for coarse-grained
/// tasks (whole simulation runs) that pay off at any count.
#[cfg(feature = "parallel")]
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Maximum of `f(0), ..., f(n-1)`; `f64::NEG_INFINITY` for `n = 0`.
#[cfg(feature = "parallel")]
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    if n < PAR_THRESHOLD {
        (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
    } else {
        (0..n)
            .into_par_iter()
            .with_min_len(PAR_THRESHOLD / 2)
            .map(f)
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(not(feature = "parallel"))]
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(10_000, |i| i * 2);
        assert_eq!(v[0], 0);
        assert_eq!(v[9_999], 19_998);
    }

    #[test]
    fn max_matches_sequential() {
        let f = |i: usize| ((i as f64) * 0.7).sin();
        let seq = (0..10_000).map(f).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max_indexed(10_000, f), seq);
        assert_eq!(max_indexed(0, f), f64::NEG_INFINITY);
    }
}
