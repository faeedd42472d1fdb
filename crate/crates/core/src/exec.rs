//! Data-parallel helpers with a sequential fallback.
//!
//! Every hot loop in the crate goes through these functions so that
//! `Execution::Sequential` and the `parallel` feature give identical results:
//! work is split by index and collected in index order.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Applies `f` to each item of a slice.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fills `out` row by row; `f(row_index, row)`.
pub fn for_each_row<T, F>(exec: Execution, out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        return;
    }
    let _ = exec;
    out.chunks_mut(width).enumerate().for_each(|(j, row)| f(j, row));
}

/// Sorts and deduplicates in place.
pub fn sort_dedup<T: Ord + Send>(exec: Execution, v: &mut Vec<T>) {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        v.par_sort_unstable();
        v.dedup();
        return;
    }
    let _ = exec;
    v.sort_unstable();
    v.dedup();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_agree() {
        let a = map_range(Execution::Parallel, 1000, |i| i * i);
        let b = map_range(Execution::Sequential, 1000, |i| i * i);
        assert_eq!(a, b);
        let mut p = vec![0u32; 12];
        let mut s = vec![0u32; 12];
        for_each_row(Execution::Parallel, &mut p, 4, |j, r| r.iter_mut().enumerate().for_each(|(i, x)| *x = (j * 10 + i) as u32));
        for_each_row(Execution::Sequential, &mut s, 4, |j, r| r.iter_mut().enumerate().for_each(|(i, x)| *x = (j * 10 + i) as u32));
        assert_eq!(p, s);
        let mut v = vec![3, 1, 3, 2, 1];
        sort_dedup(Execution::Parallel, &mut v);
        assert_eq!(v, vec![1, 2, 3]);
    }
}
