//! Execution strategy for the embarrassingly parallel sweeps (trajectory
//! batches, randomized bound suites, frame/valuation enumeration).
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool. Without it both variants run sequentially, so call
//! sites never need `cfg` guards. Results are always returned in input order.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this strategy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map_slice<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(self, range: Range<u64>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    /// First (in input order) item for which `f` returns `Some`.
    pub fn find_map_first<T, R, F>(self, items: &[T], f: F) -> Option<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Option<R> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().find_map_first(f);
        }
        items.iter().find_map(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map_slice(&xs, |x| x * x);
        let par = Execution::Parallel.map_slice(&xs, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(Execution::Sequential.map_range(0..50, |i| i + 1), Execution::Parallel.map_range(0..50, |i| i + 1));
    }

    #[test]
    fn find_map_first_is_deterministic() {
        let xs: Vec<u32> = (0..10_000).collect();
        let hit = |x: &u32| (x % 97 == 13).then_some(*x);
        assert_eq!(Execution::Parallel.find_map_first(&xs, hit), Some(13));
        assert_eq!(Execution::Sequential.find_map_first(&xs, hit), Some(13));
        assert_eq!(Execution::Parallel.find_map_first(&xs, |_| None::<u32>), None);
    }
}
