//! Execution mode for the per-node inner loops.
//!
//! Every per-node computation in a step is independent of the others, so the
//! solvers map over nodes either sequentially or on the rayon pool. Results are
//! always collected in node order and all reductions happen afterwards on a
//! single thread, so both modes produce bitwise-identical traces.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the crate is built without `parallel`.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this mode will actually use worker threads in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, preserving order.
pub(crate) fn map_nodes<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Like [`map_nodes`] for fallible work; the error reported is the one from the
/// lowest node index, independent of scheduling.
pub(crate) fn try_map_nodes<T, E, F>(exec: Execution, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_nodes(exec, n, f).into_iter().collect()
}
