//! Execution policy for the data-parallel kernels.
//!
//! Every hot loop in the crate (pointwise phase products, point enumeration,
//! CBC candidate scans, parameter sweeps) goes through [`Exec`]. With the
//! `parallel` feature enabled `Exec::Parallel` dispatches to rayon; without it
//! both variants run the same sequential loop, so results never depend on the
//! feature set.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum number of elements handed to one rayon task.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this policy actually runs on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `f(i, &mut data[i])` for every index.
    pub fn for_each_mut<T, F>(self, data: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_iter_mut()
                .with_min_len(MIN_CHUNK)
                .enumerate()
                .for_each(|(i, x)| f(i, x));
            return;
        }
        data.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }

    /// `f(&mut a[i], &b[i])` for every index; the slices must match in length.
    pub fn zip_mut<T, U, F>(self, a: &mut [T], b: &[U], f: F)
    where
        T: Send,
        U: Sync,
        F: Fn(&mut T, &U) + Sync + Send,
    {
        assert_eq!(a.len(), b.len());
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            a.par_iter_mut()
                .with_min_len(MIN_CHUNK)
                .zip(b.par_iter())
                .for_each(|(x, y)| f(x, y));
            return;
        }
        a.iter_mut().zip(b).for_each(|(x, y)| f(x, y));
    }

    /// Apply `f` to fixed-size chunks of `data`, passing the chunk index.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Collect `f(i)` for `i in 0..len`, in index order.
    pub fn map_collect<R, F>(self, len: usize, f: F) -> Vec<R>
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

    /// Sum `f(i)` over `i in 0..len`.
    ///
    /// Partial sums are taken over fixed blocks and then added in block
    /// order, so the result is bit-identical for both policies and any
    /// thread count.
    pub fn sum_f64<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        const BLOCK: usize = 4096;
        let blocks = len.div_ceil(BLOCK);
        self.map_collect(blocks, |b| {
            let end = ((b + 1) * BLOCK).min(len);
            (b * BLOCK..end).map(&f).sum::<f64>()
        })
        .into_iter()
        .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let mut v = vec![0usize; 10_000];
            exec.for_each_mut(&mut v, |i, x| *x = i * 3);
            assert!(v.iter().enumerate().all(|(i, &x)| x == 3 * i));
            let squares = exec.map_collect(100, |i| i * i);
            assert_eq!(squares[99], 99 * 99);
            let s = exec.sum_f64(1000, |i| i as f64);
            assert_eq!(s, 499_500.0);
        }
    }
}
