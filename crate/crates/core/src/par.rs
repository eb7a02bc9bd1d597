//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in input order, and reductions are always done
//! sequentially afterwards, so numeric output does not depend on the execution
//! mode or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How per-element work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing. Falls back to sequential when the `parallel`
    /// feature is disabled.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible variant of [`map_range`]; the first error in index order wins.
pub fn try_map_range<R, E, F>(exec: Execution, n: usize, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync + Send,
{
    map_range(exec, n, f).into_iter().collect()
}

pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x)),
        _ => items.iter_mut().enumerate().for_each(|(i, x)| f(i, x)),
    }
}

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
