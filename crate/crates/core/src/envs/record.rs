use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Cell, GridWorld, TaskEnv};
use crate::{Error, Result, TaskId};

/// One episode's trajectory. Serialized as a single JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub task: TaskId,
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub success: bool,
    /// Task whose policy produced each action.
    pub action_sources: Vec<TaskId>,
}

impl EpisodeRecord {
    pub fn new(task: TaskId, start: usize) -> Self {
        Self {
            task,
            states: vec![start],
            actions: Vec::new(),
            rewards: Vec::new(),
            success: false,
            action_sources: Vec::new(),
        }
    }

    pub fn push(&mut self, action: usize, source: TaskId, reward: f64, next_state: usize) {
        self.actions.push(action);
        self.action_sources.push(source);
        self.rewards.push(reward);
        self.states.push(next_state);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Checks the structural invariants against the environment that produced it.
    pub fn validate<E: TaskEnv + ?Sized>(&self, env: &E) -> Result<()> {
        let bad = |msg: String| Err(Error::Invariant(format!("episode of task {}: {msg}", self.task)));
        if self.states.len() != self.actions.len() + 1 {
            return bad(format!("{} states for {} actions", self.states.len(), self.actions.len()));
        }
        if self.rewards.len() != self.actions.len() || self.action_sources.len() != self.actions.len() {
            return bad("rewards/sources misaligned with actions".into());
        }
        if self.success && !self.states.contains(&env.goal_state(self.task)) {
            return bad("marked successful but never reached the goal".into());
        }
        if self.actions.len() > env.horizon() {
            return bad(format!("{} steps exceed horizon {}", self.actions.len(), env.horizon()));
        }
        Ok(())
    }
}

/// Euclidean distance from every visited cell to `key_cell`.
pub fn key_state_distances(record: &EpisodeRecord, key_cell: Cell, grid: &GridWorld) -> Vec<f64> {
    record
        .states
        .iter()
        .map(|&s| grid.cell(s).euclidean(key_cell))
        .collect()
}

/// Mean of the smallest `ceil(fraction * len)` values (at least one).
/// `None` for empty input.
pub fn lower_fraction_mean(values: &[f64], fraction: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((fraction * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[..k].iter().sum::<f64>() / k as f64)
}

/// Visit totals per state across all records.
pub fn visitation_counts<'a>(records: impl IntoIterator<Item = &'a EpisodeRecord>) -> BTreeMap<usize, u64> {
    let mut counts = BTreeMap::new();
    for r in records {
        for &s in &r.states {
            *counts.entry(s).or_insert(0) += 1;
        }
    }
    counts
}

/// Turns counts into an empirical distribution.
pub fn normalize_counts(counts: &BTreeMap<usize, u64>) -> BTreeMap<usize, f64> {
    let total: u64 = counts.values().sum();
    counts
        .iter()
        .map(|(&s, &c)| (s, c as f64 / total as f64))
        .collect()
}

pub fn write_jsonl<'a, W: Write>(records: impl IntoIterator<Item = &'a EpisodeRecord>, mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: "<jsonl>".into(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
