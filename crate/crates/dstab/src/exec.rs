//! Scoped-thread executor for the solver's outermost quantifier block.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use dstab_core::solver::Executor;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DSTAB_WORKERS";

/// Runs jobs on up to `workers` threads. Jobs are claimed from a shared
/// counter and results come back in index order, so output does not depend
/// on scheduling.
#[derive(Clone, Copy, Debug)]
pub struct Threads {
    workers: usize,
}

impl Threads {
    pub fn new(workers: usize) -> Threads {
        Threads {
            workers: workers.max(1),
        }
    }
}

impl Executor for Threads {
    fn workers(&self) -> usize {
        self.workers
    }

    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        let width = self.workers.min(n);
        if width <= 1 {
            return (0..n).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut done: Vec<(usize, T)> = thread::scope(|s| {
            let handles: Vec<_> = (0..width)
                .map(|_| {
                    s.spawn(|| {
                        let mut mine = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= n {
                                break mine;
                            }
                            mine.push((i, f(i)));
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("solver worker panicked"))
                .collect()
        });
        done.sort_by_key(|(i, _)| *i);
        done.into_iter().map(|(_, t)| t).collect()
    }
}

/// Worker count from the environment, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_index_order() {
        for w in [1, 2, 7] {
            let out = Threads::new(w).map(100, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(Threads::new(3).map(0, |i| i).is_empty());
    }
}
