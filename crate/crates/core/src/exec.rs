//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] dispatches to rayon;
//! without it every mode runs sequentially. Both paths evaluate each item with the
//! same closure, so results are bit-identical across modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Node count above which per-node loops inside a single step are split across threads.
pub const PAR_MIN_NODES: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Whether this mode actually runs on multiple threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

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

    /// `out[i] = f(i)` for every index.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    /// Largest `f(i)` over `0..n` (`-inf` when empty).
    pub fn max_by_index<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n)
                .into_par_iter()
                .map(f)
                .reduce(|| f64::NEG_INFINITY, f64::max);
        }
        (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let items: Vec<f64> = (0..10_000).map(|i| i as f64 * 0.37).collect();
        let f = |x: &f64| (x.sin() * x.sqrt()).exp();
        let a = Exec::Sequential.map(&items, f);
        let b = Exec::Parallel.map(&items, f);
        assert_eq!(a, b);

        let mut o1 = vec![0.0; 5000];
        let mut o2 = vec![0.0; 5000];
        Exec::Sequential.fill(&mut o1, |i| (i as f64).ln_1p());
        Exec::Parallel.fill(&mut o2, |i| (i as f64).ln_1p());
        assert_eq!(o1, o2);

        let g = |i: usize| ((i * 7919) % 1000) as f64;
        assert_eq!(
            Exec::Sequential.max_by_index(5000, g),
            Exec::Parallel.max_by_index(5000, g)
        );
    }
}
