//! Data-parallel map helpers with a sequential fallback.
//!
//! The hot loops (scoring candidates, filtering trajectories, running seeds)
//! are index-mapped pure computations with per-item derived rng streams, so
//! parallel and sequential execution produce bit-identical results. The
//! `parallel` cargo feature gates whether rayon is compiled in at all;
//! [`ExecMode`] switches at runtime so the bench suite can compare both paths
//! in one build.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn par_map_indexed<R, F>(exec: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if exec == ExecMode::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, preserving order.
pub fn par_map<T, R, F>(exec: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    par_map_indexed(exec, items.len(), |i| f(&items[i]))
}
