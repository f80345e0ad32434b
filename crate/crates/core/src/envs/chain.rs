use super::{reward_for, RewardMode, TaskEnv, Transition};
use crate::{Error, Result, TaskId};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// States `0..=N` on a line; the agent starts at 0 and task `i` is solved by
/// reaching state `i`. Left at 0 and right at `N` are self-transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainWorld {
    n_tasks: usize,
    horizon: usize,
    reward_mode: RewardMode,
}

impl ChainWorld {
    /// A chain for `n_tasks` tasks with the default horizon `4 * n_tasks`.
    pub fn new(n_tasks: usize, reward_mode: RewardMode) -> Result<Self> {
        Self::with_horizon(n_tasks, 4 * n_tasks, reward_mode)
    }

    pub fn with_horizon(n_tasks: usize, horizon: usize, reward_mode: RewardMode) -> Result<Self> {
        if n_tasks == 0 {
            return Err(Error::domain("chain needs at least one task"));
        }
        if horizon == 0 {
            return Err(Error::domain("horizon must be positive"));
        }
        Ok(Self {
            n_tasks,
            horizon,
            reward_mode,
        })
    }

    pub fn reward_mode(&self) -> RewardMode {
        self.reward_mode
    }
}

impl TaskEnv for ChainWorld {
    fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    fn n_states(&self) -> usize {
        self.n_tasks + 1
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn start_state(&self) -> usize {
        0
    }

    fn goal_state(&self, task: TaskId) -> usize {
        task.0
    }

    fn transition(&self, task: TaskId, state: usize, action: usize) -> Result<Transition> {
        self.check_task(task)?;
        self.check_state(state)?;
        self.check_action(action)?;
        let next_state = match action {
            LEFT => state.saturating_sub(1),
            _ => (state + 1).min(self.n_tasks),
        };
        let goal = self.goal_state(task);
        Ok(Transition {
            next_state,
            reward: reward_for(self.reward_mode, goal.abs_diff(next_state), self.horizon),
            at_goal: next_state == goal,
        })
    }

    fn key_distance(&self, task: TaskId, state: usize) -> f64 {
        self.goal_state(task).abs_diff(state) as f64
    }
}
