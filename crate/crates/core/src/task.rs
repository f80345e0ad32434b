use std::fmt;

use serde::{Deserialize, Serialize};

/// One-based task index, as used in embedding files, metrics and traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub usize);

impl TaskId {
    /// Builds a task id from a zero-based position.
    pub fn from_index(index: usize) -> Self {
        TaskId(index + 1)
    }

    /// Zero-based position, for indexing per-task storage.
    ///
    /// Panics on `TaskId(0)`; callers validate ids with [`TaskId::check`] first.
    pub fn index(self) -> usize {
        assert!(self.0 >= 1, "task ids are one-based");
        self.0 - 1
    }

    /// Verifies `1 <= self <= n_tasks`.
    pub fn check(self, n_tasks: usize) -> crate::Result<Self> {
        if self.0 == 0 || self.0 > n_tasks {
            Err(crate::Error::Domain(format!(
                "task {} out of range 1..={}",
                self.0, n_tasks
            )))
        } else {
            Ok(self)
        }
    }

    pub fn all(n_tasks: usize) -> impl Iterator<Item = TaskId> {
        (1..=n_tasks).map(TaskId)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
