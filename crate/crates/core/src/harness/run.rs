use std::collections::VecDeque;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{EnvKind, ExperimentConfig, Method};
use super::metrics::{check_metrics, write_metrics_csv, MetricsRow};
use crate::controller::{write_trace_csv, ExplorationState, MtLevyController, SuccessTracker, TraceRow};
use crate::embeddings::{load_embeddings, synthetic_chain_embeddings, CandidateIndexSet};
use crate::envs::{write_jsonl, ChainWorld, Episode, EpisodeRecord, GridWorld, TaskEnv, Transition};
use crate::heavy_tail::ParetoII;
use crate::learner::{BaselineExplorer, BaselinePolicy, EpsilonGreedyPolicy, MultiHeadQTable, QTransition};
use crate::variates::RngVariates;
use crate::{Error, Result, TaskId};

/// Share of the pooled key-state distances averaged by the metric.
pub const KEY_STATE_FRACTION: f64 = 0.01;

/// Either environment, chosen by the config.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Chain(ChainWorld),
    Grid(GridWorld),
}

macro_rules! delegate {
    ($self:ident, $env:ident => $body:expr) => {
        match $self {
            AnyEnv::Chain($env) => $body,
            AnyEnv::Grid($env) => $body,
        }
    };
}

impl AnyEnv {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        Ok(match config.env {
            EnvKind::Chain => AnyEnv::Chain(config.build_chain()?),
            EnvKind::Grid => AnyEnv::Grid(config.build_grid()?),
        })
    }
}

impl TaskEnv for AnyEnv {
    fn n_tasks(&self) -> usize {
        delegate!(self, e => e.n_tasks())
    }

    fn n_states(&self) -> usize {
        delegate!(self, e => e.n_states())
    }

    fn n_actions(&self) -> usize {
        delegate!(self, e => e.n_actions())
    }

    fn horizon(&self) -> usize {
        delegate!(self, e => e.horizon())
    }

    fn start_state(&self) -> usize {
        delegate!(self, e => e.start_state())
    }

    fn goal_state(&self, task: TaskId) -> usize {
        delegate!(self, e => e.goal_state(task))
    }

    fn transition(&self, task: TaskId, state: usize, action: usize) -> Result<Transition> {
        delegate!(self, e => e.transition(task, state, action))
    }

    /// On grids with an object cell, the distance to that cell.
    fn key_distance(&self, task: TaskId, state: usize) -> f64 {
        match self {
            AnyEnv::Grid(g) => match g.object_cell() {
                Some(key) => g.cell(state).euclidean(key),
                None => g.key_distance(task, state),
            },
            AnyEnv::Chain(c) => c.key_distance(task, state),
        }
    }
}

enum Behavior {
    MtLevy {
        controller: MtLevyController,
        nearest: Vec<CandidateIndexSet>,
        epsilon: f64,
    },
    Baseline(BaselineExplorer),
}

impl Behavior {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let h = &config.hyperparameters;
        Ok(match config.method {
            Method::MtLevy => {
                let store = match &config.embeddings_path {
                    Some(path) => load_embeddings(path)?,
                    None => synthetic_chain_embeddings(config.n_tasks, 8, 0)?,
                };
                if store.n_tasks() != config.n_tasks {
                    return Err(Error::config(
                        "embeddings_path",
                        format!("{} embeddings for {} tasks", store.n_tasks(), config.n_tasks),
                    ));
                }
                Behavior::MtLevy {
                    controller: MtLevyController::new(h.lambda, config.ablations)?,
                    nearest: store.all_nearest(h.n.min(config.n_tasks))?,
                    epsilon: h.epsilon,
                }
            }
            Method::EpsilonGreedy => Behavior::Baseline(BaselineExplorer::new(BaselinePolicy::epsilon_greedy(h.epsilon)?)),
            Method::Boltzmann => Behavior::Baseline(BaselineExplorer::new(BaselinePolicy::boltzmann(h.temperature)?)),
            Method::EzGreedy => Behavior::Baseline(BaselineExplorer::new(BaselinePolicy::ez_greedy(ParetoII::new(
                h.alpha_bar + 1.0,
                h.lambda,
            )?))),
        })
    }

    fn alpha(&self, task: TaskId, tracker: &SuccessTracker) -> f64 {
        match self {
            Behavior::MtLevy { controller, .. } => controller.alpha(task, tracker),
            Behavior::Baseline(_) => tracker.alpha(task),
        }
    }
}

/// Per-task training statistics feeding the coverage and key-state columns.
struct TaskProgress {
    visited: Vec<bool>,
    coverage: usize,
    recent: VecDeque<Vec<f64>>,
}

impl TaskProgress {
    fn new(n_states: usize) -> Self {
        Self {
            visited: vec![false; n_states],
            coverage: 0,
            recent: VecDeque::new(),
        }
    }

    fn absorb(&mut self, record: &EpisodeRecord, env: &AnyEnv, window: usize) {
        for &s in &record.states {
            if !self.visited[s] {
                self.visited[s] = true;
                self.coverage += 1;
            }
        }
        if self.recent.len() == window {
            self.recent.pop_front();
        }
        self.recent
            .push_back(record.states.iter().map(|&s| env.key_distance(record.task, s)).collect());
    }

    fn key_dist_low(&self) -> Option<f64> {
        let pooled: Vec<f64> = self.recent.iter().flatten().copied().collect();
        crate::envs::lower_fraction_mean(&pooled, KEY_STATE_FRACTION)
    }
}

/// Everything one seed of one condition produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub label: String,
    pub metrics: Vec<MetricsRow>,
    pub qtable: MultiHeadQTable,
    /// Filled only with `record_episodes`.
    pub episodes: Vec<EpisodeRecord>,
    /// Filled only with `trace` on `mt_levy`.
    pub trace: Vec<TraceRow>,
    pub total_steps: u64,
    pub n_episodes: u64,
    pub final_rhos: Vec<f64>,
}

impl SeedRun {
    /// Rows of the last checkpoint, one per task.
    pub fn final_rows(&self) -> &[MetricsRow] {
        let last = self.metrics.last().map_or(0, |r| r.step);
        let start = self.metrics.iter().position(|r| r.step == last).unwrap_or(0);
        &self.metrics[start..]
    }

    pub fn final_success(&self) -> Vec<f64> {
        self.final_rows().iter().map(|r| r.eval_success).collect()
    }
}

/// `0, I, 2I, ...` up to the budget, with the budget itself always last.
pub fn checkpoint_steps(budget: u64, interval: u64) -> Vec<u64> {
    let interval = interval.max(1);
    let mut steps: Vec<u64> = (0..=budget / interval).map(|k| k * interval).collect();
    if steps.last() != Some(&budget) {
        steps.push(budget);
    }
    steps
}

/// Trains one seed in memory. Nothing is written to disk.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    config.validate()?;
    let env = AnyEnv::from_config(config)?;
    let h = &config.hyperparameters;
    let n = config.n_tasks;
    let mut tracker = SuccessTracker::new(n, h.tau, h.rho_bar, h.alpha_bar)?;
    let mut table = MultiHeadQTable::new(n, env.n_states(), env.n_actions(), h.lr, h.gamma, h.optimism)?;
    let mut behavior = Behavior::new(config)?;
    let mut variates = RngVariates::seed_from_u64(seed);
    let mut progress: Vec<TaskProgress> = (0..n).map(|_| TaskProgress::new(env.n_states())).collect();

    let checkpoints = checkpoint_steps(config.budget, config.effective_checkpoint_interval());
    let mut pending = checkpoints.iter().copied().peekable();
    let mut run = SeedRun {
        seed,
        label: config.condition_label(),
        metrics: Vec::with_capacity(checkpoints.len() * n),
        qtable: table.clone(),
        episodes: Vec::new(),
        trace: Vec::new(),
        total_steps: 0,
        n_episodes: 0,
        final_rhos: Vec::new(),
    };

    let emit = |run: &mut SeedRun, step: u64, table: &MultiHeadQTable, tracker: &SuccessTracker, behavior: &Behavior, progress: &[TaskProgress]| -> Result<()> {
        for task in TaskId::all(n) {
            let p = &progress[task.index()];
            run.metrics.push(MetricsRow {
                step,
                task,
                eval_success: evaluate_greedy(&env, table, task, config.eval_episodes)?,
                tracked_rho: tracker.rho(task),
                alpha: behavior.alpha(task, tracker),
                coverage: p.coverage,
                key_dist_low1pct: p.key_dist_low(),
            });
        }
        Ok(())
    };

    while let Some(step) = pending.next_if(|&c| c == 0) {
        emit(&mut run, step, &table, &tracker, &behavior, &progress)?;
    }
    while run.total_steps < config.budget {
        let task = TaskId::from_index((run.n_episodes % n as u64) as usize);
        let record = train_episode(
            &env,
            task,
            &mut behavior,
            &mut table,
            &tracker,
            &mut variates,
            config.trace.then_some(&mut run.trace),
            run.total_steps,
        )?;
        run.total_steps += record.len() as u64;
        run.n_episodes += 1;
        tracker.update(task, record.success)?;
        progress[task.index()].absorb(&record, &env, config.key_state_window);
        if config.record_episodes {
            run.episodes.push(record);
        }
        while let Some(step) = pending.next_if(|&c| c <= run.total_steps) {
            emit(&mut run, step, &table, &tracker, &behavior, &progress)?;
        }
    }

    check_metrics(&run.metrics)?;
    let bound = config.budget + env.horizon() as u64;
    if run.total_steps > bound {
        return Err(Error::Invariant(format!(
            "consumed {} steps against budget {} plus one horizon",
            run.total_steps, config.budget
        )));
    }
    run.final_rhos = tracker.rhos().to_vec();
    run.qtable = table;
    Ok(run)
}

#[allow(clippy::too_many_arguments)]
fn train_episode(
    env: &AnyEnv,
    task: TaskId,
    behavior: &mut Behavior,
    table: &mut MultiHeadQTable,
    tracker: &SuccessTracker,
    variates: &mut RngVariates,
    mut trace: Option<&mut Vec<TraceRow>>,
    t0: u64,
) -> Result<EpisodeRecord> {
    let mut ep = Episode::reset(env, task)?;
    let mut record = EpisodeRecord::new(task, ep.state());
    let mut xs = ExplorationState::new();
    if let Behavior::Baseline(e) = behavior {
        e.reset();
    }
    while !ep.is_done() {
        let s = ep.state();
        let (action, source) = match behavior {
            Behavior::MtLevy {
                controller,
                nearest,
                epsilon,
            } => {
                let policy = EpsilonGreedyPolicy {
                    table,
                    epsilon: *epsilon,
                };
                let d = controller.step(&mut xs, task, s, tracker, &nearest[task.index()], &policy, variates)?;
                if let Some(rows) = trace.as_deref_mut() {
                    rows.push(TraceRow::new((t0 as usize) + ep.steps(), task, &d));
                }
                (d.action, d.source_task)
            }
            Behavior::Baseline(e) => (e.act(table, task, s, variates), task),
        };
        let o = ep.step(action)?;
        table.update(
            task,
            &QTransition {
                state: s,
                action,
                reward: o.reward,
                next_state: o.next_state,
                terminal: o.success,
            },
        )?;
        record.push(action, source, o.reward, o.next_state);
        record.success |= o.success;
    }
    record.validate(env)?;
    Ok(record)
}

/// Fraction of `episodes` greedy rollouts of `task` that reach its goal.
///
/// Environment and greedy policy are both deterministic, so every rollout
/// repeats the first; they are still all executed.
pub fn evaluate_greedy<E: TaskEnv + ?Sized>(
    env: &E,
    table: &MultiHeadQTable,
    task: TaskId,
    episodes: usize,
) -> Result<f64> {
    let mut successes = 0usize;
    for _ in 0..episodes {
        let mut ep = Episode::reset(env, task)?;
        let mut reached = false;
        while !ep.is_done() {
            reached |= ep.step(table.greedy_action(task, ep.state()))?.success;
        }
        successes += reached as usize;
    }
    Ok(successes as f64 / episodes as f64)
}

/// Files written for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutputs {
    pub seed: u64,
    pub metrics: PathBuf,
    pub qtable: PathBuf,
    pub episodes: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub total_steps: u64,
}

impl SeedOutputs {
    pub fn files(&self) -> Vec<&Path> {
        let mut v = vec![self.metrics.as_path(), self.qtable.as_path()];
        v.extend(self.episodes.as_deref());
        v.extend(self.trace.as_deref());
        v
    }
}

pub fn metrics_file_name(label: &str, seed: u64) -> String {
    format!("metrics_{label}_seed{seed}.csv")
}

/// Runs every seed of `config` on a pool of `workers` threads (0 picks the
/// core count) and writes each seed's files into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Vec<SeedOutputs>> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(config, seed).and_then(|run| write_seed_outputs(config, &run)))
            .collect()
    })
}

pub fn write_seed_outputs(config: &ExperimentConfig, run: &SeedRun) -> Result<SeedOutputs> {
    let dir = &config.output_dir;
    let stem = format!("{}_seed{}", run.label, run.seed);
    let metrics = dir.join(metrics_file_name(&run.label, run.seed));
    write_atomic(&metrics, |w| write_metrics_csv(&run.metrics, w))?;
    let qtable = dir.join(format!("qtable_{stem}.json"));
    write_atomic(&qtable, |w| run.qtable.write_json(w))?;
    let episodes = if config.record_episodes {
        let path = dir.join(format!("episodes_{stem}.jsonl"));
        write_atomic(&path, |w| write_jsonl(&run.episodes, w))?;
        Some(path)
    } else {
        None
    };
    let trace = if config.trace && config.method == Method::MtLevy {
        let path = dir.join(format!("trace_{stem}.csv"));
        write_atomic(&path, |w| write_trace_csv(&run.trace, w))?;
        Some(path)
    } else {
        None
    };
    Ok(SeedOutputs {
        seed: run.seed,
        metrics,
        qtable,
        episodes,
        trace,
        total_steps: run.total_steps,
    })
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
