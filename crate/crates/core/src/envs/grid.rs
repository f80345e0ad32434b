use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{reward_for, RewardMode, TaskEnv, Transition};
use crate::{Error, Result, TaskId};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const GRID_LEFT: usize = 2;
pub const GRID_RIGHT: usize = 3;
pub const GRID_ACTIONS: usize = 4;

/// `(x, y)` with `y` growing downward. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell(pub usize, pub usize);

impl Cell {
    pub fn euclidean(self, other: Cell) -> f64 {
        (self.0 as f64 - other.0 as f64).hypot(self.1 as f64 - other.1 as f64)
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.0.abs_diff(other.0) + self.1.abs_diff(other.1)
    }
}

/// An open `width x height` grid with 4-neighborhood moves; moving into the
/// boundary is a self-transition. Every task has its own goal cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: usize,
    height: usize,
    start: Cell,
    goals: Vec<Cell>,
    object_cell: Option<Cell>,
    horizon: usize,
    reward_mode: RewardMode,
}

impl GridWorld {
    /// Grid with the default horizon `4 * (width + height)`.
    pub fn new(width: usize, height: usize, start: Cell, goals: Vec<Cell>, reward_mode: RewardMode) -> Result<Self> {
        Self::with_horizon(width, height, start, goals, 4 * (width + height), reward_mode)
    }

    pub fn with_horizon(
        width: usize,
        height: usize,
        start: Cell,
        goals: Vec<Cell>,
        horizon: usize,
        reward_mode: RewardMode,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain("grid dimensions must be positive"));
        }
        if horizon == 0 {
            return Err(Error::domain("horizon must be positive"));
        }
        if goals.is_empty() {
            return Err(Error::domain("grid needs at least one task goal"));
        }
        let inside = |c: Cell| c.0 < width && c.1 < height;
        if !inside(start) {
            return Err(Error::domain(format!("start {start:?} outside the grid")));
        }
        for (i, &g) in goals.iter().enumerate() {
            if !inside(g) {
                return Err(Error::domain(format!("goal of task {} at {g:?} outside the grid", i + 1)));
            }
            if g == start {
                return Err(Error::domain(format!("goal of task {} coincides with the start", i + 1)));
            }
            if goals[..i].contains(&g) {
                return Err(Error::domain(format!("goal of task {} at {g:?} is not distinct", i + 1)));
            }
        }
        Ok(Self {
            width,
            height,
            start,
            goals,
            object_cell: None,
            horizon,
            reward_mode,
        })
    }

    /// Spreads `n_tasks` goals along the quarter ellipse farthest from the
    /// top-left corner, which is the default start.
    pub fn default_goals(width: usize, height: usize, n_tasks: usize) -> Result<Vec<Cell>> {
        if n_tasks == 0 || n_tasks + 1 > width * height {
            return Err(Error::domain(format!(
                "cannot place {n_tasks} goals on a {width}x{height} grid"
            )));
        }
        let mut goals: Vec<Cell> = Vec::with_capacity(n_tasks);
        for t in 0..n_tasks {
            let theta = FRAC_PI_2 * (t as f64 + 0.5) / n_tasks as f64;
            let x = ((width - 1) as f64 * theta.sin()).round() as usize;
            let y = ((height - 1) as f64 * theta.cos()).round() as usize;
            let mut cell = Cell(x, y);
            // Nudge collisions toward the far corner, then scan.
            if goals.contains(&cell) || cell == Cell(0, 0) {
                cell = (0..width * height)
                    .rev()
                    .map(|s| Cell(s % width, s / width))
                    .find(|c| !goals.contains(c) && *c != Cell(0, 0))
                    .expect("enough free cells");
            }
            goals.push(cell);
        }
        Ok(goals)
    }

    pub fn with_object_cell(mut self, cell: Option<Cell>) -> Result<Self> {
        if let Some(c) = cell {
            if c.0 >= self.width || c.1 >= self.height {
                return Err(Error::domain(format!("object cell {c:?} outside the grid")));
            }
        }
        self.object_cell = cell;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self, task: TaskId) -> Cell {
        self.goals[task.index()]
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn object_cell(&self) -> Option<Cell> {
        self.object_cell
    }

    pub fn cell(&self, state: usize) -> Cell {
        Cell(state % self.width, state / self.width)
    }

    pub fn state(&self, cell: Cell) -> usize {
        cell.1 * self.width + cell.0
    }
}

impl TaskEnv for GridWorld {
    fn n_tasks(&self) -> usize {
        self.goals.len()
    }

    fn n_states(&self) -> usize {
        self.width * self.height
    }

    fn n_actions(&self) -> usize {
        GRID_ACTIONS
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn start_state(&self) -> usize {
        self.state(self.start)
    }

    fn goal_state(&self, task: TaskId) -> usize {
        self.state(self.goal(task))
    }

    fn transition(&self, task: TaskId, state: usize, action: usize) -> Result<Transition> {
        self.check_task(task)?;
        self.check_state(state)?;
        self.check_action(action)?;
        let Cell(x, y) = self.cell(state);
        let next = match action {
            UP => Cell(x, y.saturating_sub(1)),
            DOWN => Cell(x, (y + 1).min(self.height - 1)),
            GRID_LEFT => Cell(x.saturating_sub(1), y),
            _ => Cell((x + 1).min(self.width - 1), y),
        };
        let goal = self.goal(task);
        Ok(Transition {
            next_state: self.state(next),
            reward: reward_for(self.reward_mode, next.manhattan(goal), self.horizon),
            at_goal: next == goal,
        })
    }

    fn key_distance(&self, task: TaskId, state: usize) -> f64 {
        self.cell(state).euclidean(self.goal(task))
    }
}
