use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use damped_eb_core::harness::Executor;

/// Spreads study runs over a fixed number of scoped worker threads. Jobs
/// are handed out one at a time, so long and short runs balance out.
#[derive(Debug, Clone, Copy)]
pub struct Threaded {
    workers: usize,
}

impl Threaded {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    /// One worker per available core.
    pub fn from_available() -> Self {
        Self::new(thread::available_parallelism().map_or(1, NonZeroUsize::get))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Default for Threaded {
    fn default() -> Self {
        Self::from_available()
    }
}

impl Executor for Threaded {
    fn execute<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.workers.min(count);
        if workers <= 1 {
            return (0..count).map(job).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= count {
                        break;
                    }
                    let value = job(k);
                    slots.lock().expect("worker panicked")[k] = Some(value);
                });
            }
        });
        slots
            .into_inner()
            .expect("worker panicked")
            .into_iter()
            .map(|v| v.expect("job produced no result"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_job_order() {
        let exec = Threaded::new(4);
        let out = exec.execute(37, |k| {
            if k % 5 == 0 {
                thread::sleep(std::time::Duration::from_millis(2));
            }
            k * k
        });
        assert_eq!(out, (0..37).map(|k| k * k).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_sizes() {
        let exec = Threaded::new(0);
        assert_eq!(exec.workers(), 1);
        assert!(exec.execute(0, |k| k).is_empty());
        assert_eq!(Threaded::new(8).execute(1, |k| k + 1), [1]);
    }
}
