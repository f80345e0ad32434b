//! Multi-task exploration with behavior sharing and heavy-tailed action
//! repetition.
//!
//! The crate is organized bottom-up:
//!
//! - [`heavy_tail`]: type-II Pareto durations and 2D random walks.
//! - [`embeddings`]: task embeddings and nearest-task candidate sets.
//! - [`controller`]: success tracking and the per-step behavior controller.
//! - [`envs`]: chain and grid multi-task environments.
//! - [`learner`]: multi-head tabular Q-learning and baseline explorers.
//! - [`harness`]: configs, experiment runs, metrics and summaries.
//!
//! Runnable examples live in `examples/`; `cargo run --example <name>`.

pub mod controller;
pub mod embeddings;
pub mod envs;
mod error;
pub mod harness;
pub mod heavy_tail;
pub mod learner;
mod task;
pub mod variates;

pub use error::{Error, Result};
pub use task::TaskId;
