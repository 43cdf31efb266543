//! Data-parallel helpers. With the `parallel` feature these fan out over the
//! rayon pool; without it they run the same closures sequentially. Every
//! helper preserves index order in its output, so results do not depend on
//! the number of workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`.
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

/// Fallible variant of [`map_indexed`]; the error reported is the one with the
/// smallest index.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    let results = map_indexed(n, f);
    results.into_iter().collect()
}

/// Calls `f(index, part)` for each of the given disjoint slices and collects
/// the results in order.
pub fn map_parts<T, R, F>(parts: Vec<&mut [T]>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        parts.into_par_iter().enumerate().map(|(i, p)| f(i, p)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        parts.into_iter().enumerate().map(|(i, p)| f(i, p)).collect()
    }
}

/// Calls `f(row_index, row)` for each `width`-sized chunk of `out` and
/// collects the results in row order; the error reported is the one from the
/// lowest row.
pub fn try_map_rows<T, R, E, F>(out: &mut [T], width: usize, f: F) -> Result<Vec<R>, E>
where
    T: Send,
    R: Send,
    E: Send,
    F: Fn(usize, &mut [T]) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let results: Vec<Result<R, E>> = out.par_chunks_mut(width).enumerate().map(|(j, row)| f(j, row)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<R, E>> = out.chunks_mut(width).enumerate().map(|(j, row)| f(j, row)).collect();
    results.into_iter().collect()
}

/// Calls `f(row_index, row)` for each `width`-sized chunk of `out`.
pub fn for_each_row<T, F>(out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(width).enumerate().for_each(|(j, row)| f(j, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.chunks_mut(width).enumerate().for_each(|(j, row)| f(j, row));
    }
}

/// Number of workers the helpers will use.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Min and max over a slice; NaN anywhere yields NaN in both slots.
pub fn min_max(values: &[f64]) -> (f64, f64) {
    let fold = |(lo, hi): (f64, f64), &v: &f64| {
        if v.is_nan() || lo.is_nan() {
            (f64::NAN, f64::NAN)
        } else {
            (lo.min(v), hi.max(v))
        }
    };
    let merge = |a: (f64, f64), b: (f64, f64)| {
        if a.0.is_nan() || b.0.is_nan() {
            (f64::NAN, f64::NAN)
        } else {
            (a.0.min(b.0), a.1.max(b.1))
        }
    };
    let init = (f64::INFINITY, f64::NEG_INFINITY);
    #[cfg(feature = "parallel")]
    {
        values
            .par_chunks(4096)
            .map(|c| c.iter().fold(init, fold))
            .reduce(|| init, merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        values.chunks(4096).map(|c| c.iter().fold(init, fold)).fold(init, merge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(100, |i| if i % 30 == 29 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(29));
    }

    #[test]
    fn min_max_detects_nan() {
        let mut v: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(min_max(&v), (0.0, 9999.0));
        v[5000] = f64::NAN;
        assert!(min_max(&v).0.is_nan());
    }
}
