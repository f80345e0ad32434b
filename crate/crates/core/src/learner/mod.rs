//! Tabular multi-head Q-learning and the single-task exploration baselines.

mod baseline;
mod qtable;

pub use baseline::{softmax, softmax_sample, BaselineExplorer, BaselinePolicy};
pub use qtable::{EpsilonGreedyPolicy, GreedyPolicy, MultiHeadQTable, QTableFile, QTransition};
