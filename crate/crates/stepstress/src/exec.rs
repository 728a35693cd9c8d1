//! Replication execution: data-parallel over independent replications
//! with a sequential fallback. Results are collected in replication order
//! so summaries are identical under either mode.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

/// Apply `f` to every index in 0..count, in order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: u64, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Parallelism::Sequential => (0..count).map(f).collect(),
        Parallelism::Parallel => (0..count).into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: u64, _mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
