//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature disabled, [`Execution::Parallel`] runs the
//! same code sequentially. Both paths produce identical results: maps keep
//! input order and reductions use a total order.

use std::cmp::Ordering;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work is actually spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..len`.
    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Smallest `(score, index)` over `0..len`, skipping `None` scores.
    /// Scores compare with `f64::total_cmp`; ties go to the lower index.
    pub fn argmin_range<F>(self, len: u64, f: F) -> Option<(f64, u64)>
    where
        F: Fn(u64) -> Option<f64> + Sync + Send,
    {
        let pick = |a: Option<(f64, u64)>, b: Option<(f64, u64)>| match (a, b) {
            (Some(x), Some(y)) => Some(if lexi_cmp(x, y) == Ordering::Greater { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        };
        let score = |i: u64| f(i).map(|s| (s, i));
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(score).reduce(|| None, pick);
        }
        (0..len).map(score).fold(None, pick)
    }
}

fn lexi_cmp(a: (f64, u64), b: (f64, u64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}
