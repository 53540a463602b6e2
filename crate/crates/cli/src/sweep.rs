//! Bounded worker pool over independent cells with panic isolation.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Diverged { step: usize },
    Failed { message: String },
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Diverged { .. } => "diverged",
            CellStatus::Failed { .. } => "failed",
        }
    }
}

/// Run `work` on every item with at most `jobs` threads.
///
/// Results come back in input order whatever the scheduling. A cell that
/// errors or panics becomes `Err(message)` and never aborts the others.
pub fn run_cells<T, R, F>(items: &[T], jobs: usize, work: F) -> CliResult<Vec<Result<R, String>>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| {
        items
            .par_iter()
            .map(|item| match catch_unwind(AssertUnwindSafe(|| work(item))) {
                Ok(Ok(r)) => Ok(r),
                Ok(Err(e)) => Err(e.to_string()),
                Err(payload) => Err(panic_message(payload.as_ref())),
            })
            .collect()
    }))
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_worker_count() {
        let items: Vec<u64> = (0..40).collect();
        let one = run_cells(&items, 1, |x| Ok(x * x)).unwrap();
        let four = run_cells(&items, 4, |x| Ok(x * x)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn a_panicking_cell_is_isolated() {
        let items = [1, 2, 3];
        let out = run_cells(&items, 2, |x| {
            if *x == 2 {
                panic!("cell two");
            }
            Ok(*x)
        })
        .unwrap();
        assert_eq!(out[0], Ok(1));
        assert_eq!(out[1], Err("panic: cell two".into()));
        assert_eq!(out[2], Ok(3));
    }
}
