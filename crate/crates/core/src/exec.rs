//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs
//! on the rayon pool. Without it both variants run sequentially, so callers
//! never need their own `cfg` gates. Every helper preserves input order.
//! The default is sequential on a single-threaded pool.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// Parallel when the feature is on and the pool has more than one thread.
impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        if rayon::current_num_threads() > 1 {
            return Execution::Parallel;
        }
        Execution::Sequential
    }
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_indexed<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(usize, &T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
        }
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }

    pub fn map_range<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Appends `f` of each item to `out`, stopping at the first error in
    /// input order. Nothing is appended on error.
    pub fn try_extend_indexed<'a, T, U, E, F>(
        self,
        out: &mut Vec<U>,
        items: &'a [T],
        f: F,
    ) -> Result<(), E>
    where
        T: Sync,
        U: Send,
        E: Send,
        F: Fn(usize, &'a T) -> Result<U, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            let results: Vec<Result<U, E>> =
                items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
            let ok: Vec<U> = results.into_iter().collect::<Result<_, _>>()?;
            out.extend(ok);
            return Ok(());
        }
        let start = out.len();
        out.reserve(items.len());
        for (i, t) in items.iter().enumerate() {
            match f(i, t) {
                Ok(u) => out.push(u),
                Err(e) => {
                    out.truncate(start);
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    /// Mutates in place fallibly; the first error in input order wins.
    pub fn try_for_each_mut<T, E, F>(self, items: &mut [T], f: F) -> Result<(), E>
    where
        T: Send,
        E: Send,
        F: Fn(usize, &mut T) -> Result<(), E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            let results: Vec<Result<(), E>> = items
                .par_iter_mut()
                .enumerate()
                .map(|(i, t)| f(i, t))
                .collect();
            return results.into_iter().collect();
        }
        items
            .iter_mut()
            .enumerate()
            .try_for_each(|(i, t)| f(i, t))
    }
}
