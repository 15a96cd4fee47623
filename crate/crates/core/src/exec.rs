//! Execution strategy for the data-parallel kernels.
//!
//! With the `parallel` feature (on by default) the element-wise kernels and
//! the independent-run loops go through rayon; without it everything runs on
//! the calling thread. Reductions are evaluated over fixed-size chunks whose
//! partial sums are combined in order, so both strategies produce
//! bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Slices shorter than this are always processed sequentially.
pub const PAR_MIN_LEN: usize = 4096;

/// Chunk length for deterministic reductions.
pub const REDUCE_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

impl Exec {
    #[cfg(feature = "parallel")]
    #[inline]
    fn parallel_for(self, len: usize) -> bool {
        match self {
            Exec::Sequential => false,
            Exec::Parallel => len >= PAR_MIN_LEN,
        }
    }

    /// `out[i] = f(i)` for every index.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.parallel_for(out.len()) {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    /// Sum of `f(i)` over `0..len`, combined chunk by chunk in index order.
    pub fn sum<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let n_chunks = len.div_ceil(REDUCE_CHUNK);
        let chunk_sum = |c: usize| {
            let lo = c * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        };
        #[cfg(feature = "parallel")]
        if self.parallel_for(len) {
            let partial: Vec<f64> = (0..n_chunks).into_par_iter().map(chunk_sum).collect();
            return partial.iter().sum();
        }
        (0..n_chunks).map(chunk_sum).sum()
    }

    /// Maps independent jobs, preserving order. Used for whole simulations,
    /// so the parallel path does not apply the length threshold.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
        }
    }
}

/// Euclidean dot product with the default strategy.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    Exec::default().sum(a.len(), |i| a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
