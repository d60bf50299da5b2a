//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it every path is a plain sequential iterator. Output order never
//! depends on the concurrency setting.

use std::num::NonZeroUsize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements row-wise maps stay sequential.
#[cfg(feature = "parallel")]
const PAR_MIN_ELEMENTS: usize = 1 << 14;

/// How independent work items are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Concurrency {
    /// Plain iterator on the calling thread.
    Sequential,
    /// Rayon's global pool (sequential without the `parallel` feature).
    #[default]
    Auto,
    /// A dedicated pool with this many threads.
    Threads(NonZeroUsize),
}

impl Concurrency {
    /// `0` means [`Concurrency::Auto`], `1` sequential.
    pub fn from_threads(n: usize) -> Self {
        match n {
            0 => Concurrency::Auto,
            1 => Concurrency::Sequential,
            n => Concurrency::Threads(NonZeroUsize::new(n).expect("n > 1")),
        }
    }
}

/// Whether this build was compiled with rayon support.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `items`, preserving order.
pub fn map_ordered<T, R, F>(items: &[T], concurrency: Concurrency, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match concurrency {
        Concurrency::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Concurrency::Auto => items.par_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Concurrency::Threads(n) => with_pool(n, || items.par_iter().map(&f).collect()),
        #[cfg(not(feature = "parallel"))]
        _ => items.iter().map(f).collect(),
    }
}

/// Runs `f` with any nested rayon work confined to `concurrency`.
pub fn install<R: Send>(concurrency: Concurrency, f: impl FnOnce() -> R + Send) -> R {
    match concurrency {
        #[cfg(feature = "parallel")]
        Concurrency::Threads(n) => with_pool(n, f),
        _ => f(),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(threads: NonZeroUsize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.get())
        .build()
        .expect("failed to build rayon thread pool")
        .install(f)
}

/// One result per row of a row-major buffer.
pub(crate) fn map_rows<R, F>(values: &[f64], row_len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &[f64]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if values.len() >= PAR_MIN_ELEMENTS {
        return values
            .par_chunks(row_len)
            .enumerate()
            .map(|(c, row)| f(c, row))
            .collect();
    }
    values
        .chunks(row_len)
        .enumerate()
        .map(|(c, row)| f(c, row))
        .collect()
}

/// One result per element, with the element's row index.
pub(crate) fn map_elements<T, R, F>(values: &[T], row_len: usize, f: F) -> Vec<R>
where
    T: Copy + Sync,
    R: Send,
    F: Fn(usize, T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if values.len() >= PAR_MIN_ELEMENTS {
        return values
            .par_chunks(row_len)
            .enumerate()
            .flat_map_iter(|(c, row)| {
                let f = &f;
                row.iter().map(move |&x| f(c, x))
            })
            .collect();
    }
    values
        .chunks(row_len)
        .enumerate()
        .flat_map(|(c, row)| row.iter().map(move |&x| (c, x)))
        .map(|(c, x)| f(c, x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_across_modes() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map_ordered(&items, Concurrency::Sequential, |x| x * x);
        for c in [Concurrency::Auto, Concurrency::from_threads(3)] {
            assert_eq!(map_ordered(&items, c, |x| x * x), seq);
        }
    }

    #[test]
    fn large_element_map_keeps_rows() {
        let values: Vec<f64> = (0..(1 << 15)).map(|i| i as f64).collect();
        let rows = map_elements(&values, 1024, |c, _| c);
        assert_eq!(rows.len(), values.len());
        assert_eq!(rows[0], 0);
        assert_eq!(rows[1024], 1);
        assert_eq!(*rows.last().unwrap(), 31);
        let sums = map_rows(&values, 1024, |_, r| r.iter().sum::<f64>());
        assert_eq!(sums.len(), 32);
    }

    #[test]
    fn from_threads_mapping() {
        assert_eq!(Concurrency::from_threads(0), Concurrency::Auto);
        assert_eq!(Concurrency::from_threads(1), Concurrency::Sequential);
    }
}
