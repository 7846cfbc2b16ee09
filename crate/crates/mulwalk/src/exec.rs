//! Fixed-batch execution of index ranges.
//!
//! Work is cut into batches of a fixed size that does not depend on the
//! worker count, each batch is mapped independently, and the per-batch
//! results are reduced in index order. With the `parallel` feature the
//! batches run on the rayon pool; without it (or inside
//! [`with_execution`]`(Execution::Sequential, ..)`) they run on the calling
//! thread. Either way the outputs are bit-identical.

use std::cell::Cell;
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Batch size for sample-sized work items (one path simulation, one grid
/// point block). Fixed so that substream assignment is schedule-independent.
pub const SAMPLE_BATCH: usize = 4096;

/// How to drive the batch loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    /// Run all batches on the calling thread.
    Sequential,
    /// Use the rayon pool when the `parallel` feature is enabled; otherwise
    /// identical to `Sequential`.
    Parallel,
}

thread_local! {
    static MODE: Cell<Execution> = const { Cell::new(Execution::Parallel) };
}

/// The execution mode in effect on this thread.
pub fn current_execution() -> Execution {
    MODE.with(|m| m.get())
}

/// Runs `f` with the given execution mode forced on this thread. Used by the
/// benchmarks to time the sequential path against the parallel one.
pub fn with_execution<R>(mode: Execution, f: impl FnOnce() -> R) -> R {
    struct Restore(Execution);
    impl Drop for Restore {
        fn drop(&mut self) {
            MODE.with(|m| m.set(self.0));
        }
    }
    let prev = MODE.with(|m| m.replace(mode));
    let _restore = Restore(prev);
    f()
}

#[cfg(feature = "parallel")]
fn parallel_active() -> bool {
    current_execution() == Execution::Parallel
}

fn batch_ranges(count: usize, batch: usize) -> Vec<Range<usize>> {
    assert!(batch > 0);
    (0..count.div_ceil(batch))
        .map(|b| b * batch..((b + 1) * batch).min(count))
        .collect()
}

/// Maps `f` over fixed-size index batches of `0..count`, returning one result
/// per batch in index order.
pub(crate) fn map_batched<T, F>(count: usize, batch: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = batch_ranges(count, batch);
    #[cfg(feature = "parallel")]
    if parallel_active() {
        return ranges.into_par_iter().map(f).collect();
    }
    ranges.into_iter().map(f).collect()
}

/// Maps `f` over each index of `0..count` (batch size one), in index order.
pub(crate) fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_batched(count, 1, |r| f(r.start))
}
