//! Deterministic fan-out over index ranges.

use std::ops::Range;

/// Splits `0..n` into at most `threads` contiguous chunks of near-equal size.
pub fn chunks(n: usize, threads: usize) -> Vec<Range<usize>> {
    let k = threads.max(1).min(n.max(1));
    let base = n / k;
    let extra = n % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Runs `f` on each chunk of `0..n`, one scoped thread per chunk, and
/// returns the results in chunk order. With one thread everything runs on
/// the caller's thread.
pub fn map_chunks<R, F>(n: usize, threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync,
{
    let ranges = chunks(n, threads);
    if ranges.len() == 1 {
        return vec![f(ranges[0].clone())];
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = ranges.into_iter().map(|r| s.spawn(|| f(r))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    })
}

/// Number of hardware threads, at least one.
pub fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
