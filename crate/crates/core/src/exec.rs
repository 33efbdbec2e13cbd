//! Serial/parallel execution switch for the node loops.
//!
//! Every kernel splits its work into contiguous chunks (one chunk per slab
//! of the outermost grid axis). Reductions are computed per chunk and then
//! folded in index order, so a kernel yields bitwise-identical results in
//! both modes and for any thread count.

/// Execution mode for data-parallel kernels.
///
/// `Parallel` uses rayon when the `parallel` feature is enabled and falls back
/// to the serial loop otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Serial,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Serial
        }
    }
}

impl Exec {
    /// True when this mode actually runs on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Calls `f(chunk_index, chunk)` on consecutive `chunk_len`-sized pieces of `out`.
    pub fn for_each_chunk<F>(self, out: &mut [f64], chunk_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        assert!(chunk_len > 0);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            out.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(k, c)| f(k, c));
            return;
        }
        out.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(k, c)| f(k, c));
    }

    /// Like [`Exec::for_each_chunk`] but each call returns a value; the values
    /// are returned in chunk order.
    pub fn map_chunks<T, F>(self, out: &mut [f64], chunk_len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut [f64]) -> T + Sync + Send,
    {
        assert!(chunk_len > 0);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return out
                .par_chunks_mut(chunk_len)
                .enumerate()
                .map(|(k, c)| f(k, c))
                .collect();
        }
        out.chunks_mut(chunk_len)
            .enumerate()
            .map(|(k, c)| f(k, c))
            .collect()
    }

    /// Evaluates `f(k)` for `k in 0..count`, returning results in index order.
    pub fn map_range<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..count).into_par_iter().map(f).collect();
        }
        (0..count).map(f).collect()
    }

    /// Sum of `f(k)` for `k in 0..count`, folded in index order.
    pub fn sum_range<F>(self, count: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map_range(count, f).into_iter().sum()
    }
}
