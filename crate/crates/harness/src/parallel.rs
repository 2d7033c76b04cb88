//! Trial-level fan-out over independent, individually seeded work items.
//! Results come back in index order, so output bytes do not depend on the
//! worker count.

use crate::{HarnessError, Result};

pub const THREADS_ENV: &str = "ABCS_THREADS";

/// Worker cap: the ABCS_THREADS environment variable when set (must be an
/// integer >= 1), otherwise the machine's available parallelism.
pub fn thread_cap() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|v| *v >= 1)
            .ok_or_else(|| {
                HarnessError::Usage(format!(
                    "{THREADS_ENV} must be an integer >= 1, got {raw:?}"
                ))
            }),
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)),
        Err(std::env::VarError::NotUnicode(_)) => Err(HarnessError::Usage(format!(
            "{THREADS_ENV} is not valid unicode"
        ))),
    }
}

/// Runs `f(0) .. f(count - 1)` on at most `cap` threads and returns the
/// results in index order. Each item must seed its own randomness from its
/// index for the output to be worker-count independent.
pub fn run_indexed<T, F>(count: usize, cap: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = cap.max(1).min(count.max(1));
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    let chunk = count.div_ceil(workers);
    let mut tagged: Vec<(usize, T)> = Vec::with_capacity(count);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(count);
            if lo >= hi {
                continue;
            }
            let f = &f;
            handles.push(scope.spawn(move || (lo..hi).map(|i| (i, f(i))).collect::<Vec<_>>()));
        }
        for handle in handles {
            tagged.extend(handle.join().expect("trial worker panicked"));
        }
    });
    tagged.sort_by_key(|(i, _)| *i);
    tagged.into_iter().map(|(_, t)| t).collect()
}
