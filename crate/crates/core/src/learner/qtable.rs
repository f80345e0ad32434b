use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::controller::PolicyTable;
use crate::variates::Variates;
use crate::{Error, Result, TaskId};

/// One observed transition for a Q-learning update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTransition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// True only for genuine terminal states; horizon cut-offs bootstrap.
    pub terminal: bool,
}

/// One Q-table per task over a shared state and action space.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadQTable {
    n_tasks: usize,
    n_states: usize,
    n_actions: usize,
    learning_rate: f64,
    gamma: f64,
    optimism: f64,
    values: Vec<f64>,
}

impl MultiHeadQTable {
    pub fn new(
        n_tasks: usize,
        n_states: usize,
        n_actions: usize,
        learning_rate: f64,
        gamma: f64,
        optimism: f64,
    ) -> Result<Self> {
        if n_tasks == 0 || n_states == 0 || n_actions == 0 {
            return Err(Error::domain("q-table dimensions must be positive"));
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(Error::domain(format!("learning rate must lie in (0, 1], got {learning_rate}")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::domain(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if !optimism.is_finite() {
            return Err(Error::domain("optimism must be finite"));
        }
        Ok(Self {
            n_tasks,
            n_states,
            n_actions,
            learning_rate,
            gamma,
            optimism,
            values: vec![optimism; n_tasks * n_states * n_actions],
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn optimism(&self) -> f64 {
        self.optimism
    }

    fn offset(&self, task: TaskId, state: usize) -> usize {
        (task.index() * self.n_states + state) * self.n_actions
    }

    /// Action values of `task` at `state`.
    pub fn row(&self, task: TaskId, state: usize) -> &[f64] {
        let o = self.offset(task, state);
        &self.values[o..o + self.n_actions]
    }

    pub fn q(&self, task: TaskId, state: usize, action: usize) -> f64 {
        self.row(task, state)[action]
    }

    pub fn set_q(&mut self, task: TaskId, state: usize, action: usize, value: f64) {
        let o = self.offset(task, state);
        self.values[o + action] = value;
    }

    pub fn max_q(&self, task: TaskId, state: usize) -> f64 {
        self.row(task, state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q(s,a) += lr * (r + gamma * max_a' Q(s',a') - Q(s,a))`, with no
    /// bootstrap on terminal transitions. Returns the new `Q(s,a)`.
    pub fn update(&mut self, task: TaskId, t: &QTransition) -> Result<f64> {
        task.check(self.n_tasks)?;
        if t.state >= self.n_states || t.next_state >= self.n_states || t.action >= self.n_actions {
            return Err(Error::domain(format!("transition {t:?} outside the table")));
        }
        let bootstrap = if t.terminal { 0.0 } else { self.max_q(task, t.next_state) };
        let target = t.reward + self.gamma * bootstrap;
        let o = self.offset(task, t.state) + t.action;
        let q = &mut self.values[o];
        *q += self.learning_rate * (target - *q);
        if !q.is_finite() {
            return Err(Error::Invariant(format!("non-finite Q value for task {task}")));
        }
        Ok(*q)
    }

    /// `argmax_a Q(s,a)`, ties going to the lowest action index.
    pub fn greedy_action(&self, task: TaskId, state: usize) -> usize {
        argmax_lowest(self.row(task, state))
    }

    pub fn to_file(&self) -> QTableFile {
        let mut values = BTreeMap::new();
        for task in TaskId::all(self.n_tasks) {
            for s in 0..self.n_states {
                for (a, &v) in self.row(task, s).iter().enumerate() {
                    values.insert(format!("{task}/{s}/{a}"), v);
                }
            }
        }
        QTableFile {
            n_tasks: self.n_tasks,
            n_states: self.n_states,
            n_actions: self.n_actions,
            learning_rate: self.learning_rate,
            gamma: self.gamma,
            optimism: self.optimism,
            values,
        }
    }

    pub fn from_file(file: &QTableFile) -> Result<Self> {
        let mut table = Self::new(
            file.n_tasks,
            file.n_states,
            file.n_actions,
            file.learning_rate,
            file.gamma,
            file.optimism,
        )?;
        for (key, &v) in &file.values {
            let parts: Vec<usize> = key
                .split('/')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::domain(format!("bad q-table key `{key}`")))?;
            let [task, s, a] = parts[..] else {
                return Err(Error::domain(format!("bad q-table key `{key}`")));
            };
            let task = TaskId(task).check(file.n_tasks)?;
            if s >= file.n_states || a >= file.n_actions {
                return Err(Error::domain(format!("q-table key `{key}` out of range")));
            }
            table.set_q(task, s, a, v);
        }
        Ok(table)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_file())?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let file: QTableFile = serde_json::from_reader(input)?;
        Self::from_file(&file)
    }
}

/// Checkpoint layout: values keyed by `task/state/action`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableFile {
    pub n_tasks: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub optimism: f64,
    pub values: BTreeMap<String, f64>,
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy action per head.
#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy<'a> {
    pub table: &'a MultiHeadQTable,
}

impl PolicyTable for GreedyPolicy<'_> {
    fn n_actions(&self) -> usize {
        self.table.n_actions()
    }

    fn act(&self, task: TaskId, state: usize, _: &mut dyn Variates) -> usize {
        self.table.greedy_action(task, state)
    }
}

/// Per-step epsilon-greedy over each head. Draws one variate per call, plus
/// a second when it explores.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonGreedyPolicy<'a> {
    pub table: &'a MultiHeadQTable,
    pub epsilon: f64,
}

impl PolicyTable for EpsilonGreedyPolicy<'_> {
    fn n_actions(&self) -> usize {
        self.table.n_actions()
    }

    fn act(&self, task: TaskId, state: usize, variates: &mut dyn Variates) -> usize {
        if variates.uniform() < self.epsilon {
            variates.index(self.table.n_actions())
        } else {
            self.table.greedy_action(task, state)
        }
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::variates::ScriptedVariates;
    use proptest::prelude::*;

    fn table(lr: f64) -> MultiHeadQTable {
        MultiHeadQTable::new(2, 3, 2, lr, 0.99, 0.0).unwrap()
    }

    fn terminal(state: usize, action: usize, reward: f64) -> QTransition {
        QTransition {
            state,
            action,
            reward,
            next_state: state,
            terminal: true,
        }
    }

    #[test]
    fn terminal_updates() {
        let mut q = table(1.0);
        assert_eq!(q.update(TaskId(1), &terminal(0, 1, 1.0)).unwrap(), 1.0);
        let mut q = table(0.5);
        assert_eq!(q.update(TaskId(1), &terminal(0, 1, 1.0)).unwrap(), 0.5);
    }

    #[test]
    fn bootstraps_on_nonterminal() {
        let mut q = table(1.0);
        q.set_q(TaskId(1), 2, 0, 2.0);
        let t = QTransition {
            state: 1,
            action: 1,
            reward: 0.5,
            next_state: 2,
            terminal: false,
        };
        assert!((q.update(TaskId(1), &t).unwrap() - (0.5 + 0.99 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn two_state_mdp_matches_value_iteration() {
        // State 0: action 0 stays (r = 0.1), action 1 moves to 1 (r = 0).
        // State 1: action 0 returns to 0 (r = 0), action 1 terminates (r = 1).
        let step = |s: usize, a: usize| match (s, a) {
            (0, 0) => (0, 0.1, false),
            (0, 1) => (1, 0.0, false),
            (1, 0) => (0, 0.0, false),
            _ => (1, 1.0, true),
        };
        let gamma = 0.9;
        let mut exact = [[0.0f64; 2]; 2];
        for _ in 0..10_000 {
            let mut next = exact;
            for s in 0..2 {
                for a in 0..2 {
                    let (n, r, done) = step(s, a);
                    next[s][a] = r + if done { 0.0 } else { gamma * exact[n][0].max(exact[n][1]) };
                }
            }
            exact = next;
        }
        let mut q = MultiHeadQTable::new(1, 2, 2, 0.5, gamma, 0.0).unwrap();
        for _ in 0..5_000 {
            for s in 0..2 {
                for a in 0..2 {
                    let (n, r, done) = step(s, a);
                    q.update(
                        TaskId(1),
                        &QTransition {
                            state: s,
                            action: a,
                            reward: r,
                            next_state: n,
                            terminal: done,
                        },
                    )
                    .unwrap();
                }
            }
        }
        for s in 0..2 {
            for a in 0..2 {
                assert!((q.q(TaskId(1), s, a) - exact[s][a]).abs() < 1e-6, "Q({s},{a})");
            }
        }
    }

    #[test]
    fn greedy_ties_go_left() {
        let mut q = table(1.0);
        assert_eq!(q.greedy_action(TaskId(1), 0), 0);
        q.set_q(TaskId(1), 0, 0, 1.0);
        assert_eq!(q.greedy_action(TaskId(1), 0), 0);
        q.set_q(TaskId(1), 0, 1, 2.0);
        assert_eq!(q.greedy_action(TaskId(1), 0), 1);
    }

    #[test]
    fn unvisited_entries_read_as_optimism() {
        let q = MultiHeadQTable::new(1, 2, 2, 0.1, 0.9, 3.5).unwrap();
        assert_eq!(q.q(TaskId(1), 1, 1), 3.5);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(MultiHeadQTable::new(1, 1, 1, 0.0, 0.9, 0.0).is_err());
        assert!(MultiHeadQTable::new(1, 1, 1, 0.1, 1.0, 0.0).is_err());
        assert!(MultiHeadQTable::new(0, 1, 1, 0.1, 0.9, 0.0).is_err());
        assert!(table(1.0).update(TaskId(3), &terminal(0, 0, 1.0)).is_err());
        assert!(table(1.0).update(TaskId(1), &terminal(5, 0, 1.0)).is_err());
    }

    #[test]
    fn epsilon_greedy_consumes_variates_in_order() {
        let mut q = table(1.0);
        q.set_q(TaskId(1), 0, 1, 1.0);
        let p = EpsilonGreedyPolicy { table: &q, epsilon: 0.1 };
        let mut v = ScriptedVariates::new([0.5, 0.05, 0.2]);
        assert_eq!(p.act(TaskId(1), 0, &mut v), 1);
        assert_eq!(p.act(TaskId(1), 0, &mut v), 0);
        assert_eq!(v.remaining(), 0);
    }

    #[test]
    fn json_is_keyed_by_task_state_action() {
        let mut q = table(1.0);
        q.set_q(TaskId(2), 1, 0, -0.25);
        let mut buf = Vec::new();
        q.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"2/1/0\": -0.25"), "{text}");
        assert_eq!(MultiHeadQTable::read_json(text.as_bytes()).unwrap(), q);
    }

    proptest! {
        #[test]
        fn heads_are_isolated(updates in prop::collection::vec((0usize..3, 0usize..2, -1.0f64..1.0, any::<bool>()), 1..50)) {
            let mut q = table(0.3);
            let before: Vec<f64> = (0..3).flat_map(|s| q.row(TaskId(2), s).to_vec()).collect();
            for (s, a, r, done) in updates {
                q.update(TaskId(1), &QTransition { state: s, action: a, reward: r, next_state: (s + 1) % 3, terminal: done }).unwrap();
            }
            let after: Vec<f64> = (0..3).flat_map(|s| q.row(TaskId(2), s).to_vec()).collect();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn argmax_ignores_constant_shift(values in prop::collection::vec(-10i32..10, 1..6), shift in -100.0f64..100.0) {
            let v: Vec<f64> = values.iter().map(|&x| f64::from(x)).collect();
            let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
            prop_assert_eq!(argmax_lowest(&v), argmax_lowest(&shifted));
        }
    }
}
