//! Deterministic parallel map over trial indices.

use std::ops::Range;

/// Applies `f` to every trial in `range`, splitting it into contiguous chunks
/// across `workers` threads. Results come back in trial order, so the output
/// does not depend on the worker count.
pub fn map_trials<T, F>(range: Range<u64>, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let len = range.end.saturating_sub(range.start);
    let workers = workers.max(1).min(len.max(1) as usize);
    if workers == 1 {
        return range.map(f).collect();
    }
    let chunk = len.div_ceil(workers as u64);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let lo = range.start + w * chunk;
                let hi = (lo + chunk).min(range.end);
                scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
