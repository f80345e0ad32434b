//! Tabular multi-task environments.
//!
//! All tasks of an environment share one state space, one action space and
//! one deterministic transition function; tasks differ only in goal
//! placement. States and actions are dense `usize` indices.

mod chain;
mod grid;
mod record;

pub use chain::{ChainWorld, LEFT, RIGHT};
pub use grid::{Cell, GridWorld, DOWN, GRID_ACTIONS, GRID_LEFT, GRID_RIGHT, UP};
pub use record::{
    key_state_distances, lower_fraction_mean, normalize_counts, read_jsonl, visitation_counts, write_jsonl,
    EpisodeRecord,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, TaskId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// 1 on arrival at the goal, else 0.
    #[default]
    Sparse,
    /// `-(shortest-path distance to goal) / horizon` every step.
    Dense,
}

/// Result of a pure transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next_state: usize,
    pub reward: f64,
    pub at_goal: bool,
}

/// Result of stepping an [`Episode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

pub trait TaskEnv {
    fn n_tasks(&self) -> usize;
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn horizon(&self) -> usize;
    fn start_state(&self) -> usize;
    fn goal_state(&self, task: TaskId) -> usize;

    /// Deterministic `(task, state, action) -> next state, reward`.
    fn transition(&self, task: TaskId, state: usize, action: usize) -> Result<Transition>;

    /// Distance from `state` to the task's key state (its goal).
    fn key_distance(&self, task: TaskId, state: usize) -> f64;

    fn check_task(&self, task: TaskId) -> Result<TaskId> {
        task.check(self.n_tasks())
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action < self.n_actions() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "action {action} out of range 0..{}",
                self.n_actions()
            )))
        }
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state < self.n_states() {
            Ok(())
        } else {
            Err(Error::domain(format!("state {state} out of range 0..{}", self.n_states())))
        }
    }
}

/// Episode bookkeeping on top of a [`TaskEnv`]: step count, termination.
#[derive(Debug)]
pub struct Episode<'e, E: TaskEnv + ?Sized> {
    env: &'e E,
    task: TaskId,
    state: usize,
    steps: usize,
    done: bool,
}

impl<'e, E: TaskEnv + ?Sized> Episode<'e, E> {
    /// Starts an episode of `task` at the fixed start state.
    pub fn reset(env: &'e E, task: TaskId) -> Result<Self> {
        env.check_task(task)?;
        Ok(Self {
            env,
            task,
            state: env.start_state(),
            steps: 0,
            done: false,
        })
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage(format!(
                "episode of task {} already finished after {} steps",
                self.task, self.steps
            )));
        }
        let t = self.env.transition(self.task, self.state, action)?;
        self.state = t.next_state;
        self.steps += 1;
        self.done = t.at_goal || self.steps >= self.env.horizon();
        Ok(StepOutcome {
            next_state: t.next_state,
            reward: t.reward,
            done: self.done,
            success: t.at_goal,
        })
    }
}

/// Reward for arriving at `next_state`, whose shortest-path distance to the
/// goal is `distance`.
pub(crate) fn reward_for(mode: RewardMode, distance: usize, horizon: usize) -> f64 {
    match mode {
        RewardMode::Sparse => {
            if distance == 0 {
                1.0
            } else {
                0.0
            }
        }
        RewardMode::Dense => -(distance as f64) / horizon as f64,
    }
}
