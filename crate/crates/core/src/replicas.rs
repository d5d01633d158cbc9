//! Deterministic fan-out of independent replicas.

use rayon::prelude::*;

use crate::randkit::SeedTree;

/// Runs `f(index, seed)` for every replica on the current rayon pool.
/// Replica `i` always receives `root.child(i)` and results come back in index
/// order, so the thread count never changes the output.
pub fn run_replicas<T, F>(root: &SeedTree, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &SeedTree) -> T + Sync + Send,
{
    (0..count)
        .into_par_iter()
        .map(|i| f(i, &root.child(i as u64)))
        .collect()
}
