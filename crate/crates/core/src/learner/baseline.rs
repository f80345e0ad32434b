use super::qtable::MultiHeadQTable;
use crate::heavy_tail::ParetoII;
use crate::variates::Variates;
use crate::{Error, Result, TaskId};

/// Single-task exploration schemes used as baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselinePolicy {
    EpsilonGreedy { epsilon: f64 },
    Boltzmann { temperature: f64 },
    /// The controller's counter mechanics without sharing: whenever the
    /// counter is spent, draw `c` from `duration`; if `c > 1`, hold a
    /// uniformly random action for `ceil(c - 1)` steps, else act greedily.
    EzGreedy { duration: ParetoII },
}

impl BaselinePolicy {
    pub fn epsilon_greedy(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::EpsilonGreedy { epsilon })
    }

    pub fn boltzmann(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::domain(format!("temperature must be positive, got {temperature}")));
        }
        Ok(Self::Boltzmann { temperature })
    }

    pub fn ez_greedy(duration: ParetoII) -> Self {
        Self::EzGreedy { duration }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::domain(format!("epsilon must lie in [0, 1], got {epsilon}")))
    }
}

/// A [`BaselinePolicy`] plus the repetition state `ez_greedy` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineExplorer {
    policy: BaselinePolicy,
    counter: f64,
    held: Option<usize>,
}

impl BaselineExplorer {
    pub fn new(policy: BaselinePolicy) -> Self {
        Self {
            policy,
            counter: 0.0,
            held: None,
        }
    }

    pub fn policy(&self) -> BaselinePolicy {
        self.policy
    }

    /// Call at every episode start.
    pub fn reset(&mut self) {
        self.counter = 0.0;
        self.held = None;
    }

    /// True when the last action came from a random repetition still in progress.
    pub fn repeating(&self) -> bool {
        self.held.is_some()
    }

    pub fn act<V: Variates + ?Sized>(
        &mut self,
        table: &MultiHeadQTable,
        task: TaskId,
        state: usize,
        variates: &mut V,
    ) -> usize {
        let n = table.n_actions();
        match self.policy {
            BaselinePolicy::EpsilonGreedy { epsilon } => {
                if variates.uniform() < epsilon {
                    variates.index(n)
                } else {
                    table.greedy_action(task, state)
                }
            }
            BaselinePolicy::Boltzmann { temperature } => {
                softmax_sample(table.row(task, state), temperature, variates.uniform())
            }
            BaselinePolicy::EzGreedy { duration } => {
                let action = if self.counter > 1.0 {
                    self.held.expect("held action present while counter > 1")
                } else {
                    self.counter = duration.sample(variates.uniform()).expect("variates lie in [0, 1)");
                    if self.counter > 1.0 {
                        let a = variates.index(n);
                        self.held = Some(a);
                        a
                    } else {
                        self.held = None;
                        table.greedy_action(task, state)
                    }
                };
                self.counter = (self.counter - 1.0).max(0.0);
                if self.counter <= 1.0 {
                    self.held = None;
                }
                action
            }
        }
    }
}

/// Samples from `softmax(values / temperature)` with a single variate.
pub fn softmax_sample(values: &[f64], temperature: f64, u: f64) -> usize {
    let probs = softmax(values, temperature);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn softmax(values: &[f64], temperature: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}
