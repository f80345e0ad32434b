use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{Ablations, DEFAULT_ALPHA_BAR, DEFAULT_RHO_BAR, DEFAULT_TAU};
use crate::envs::{Cell, ChainWorld, GridWorld, RewardMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Chain,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MtLevy,
    EpsilonGreedy,
    Boltzmann,
    EzGreedy,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::MtLevy => "mt_levy",
            Method::EpsilonGreedy => "epsilon_greedy",
            Method::Boltzmann => "boltzmann",
            Method::EzGreedy => "ez_greedy",
        })
    }
}

/// Grid layout. Omitted fields fall back to a 15x15 grid starting in the
/// top-left corner with goals spread over the far quarter ellipse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goals: Option<Vec<Cell>>,
    pub object_cell: Option<Cell>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            width: 15,
            height: 15,
            start: Cell(0, 0),
            goals: None,
            object_cell: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub alpha_bar: f64,
    pub rho_bar: f64,
    pub tau: f64,
    /// Neighborhood size, self included.
    pub n: usize,
    pub lambda: f64,
    /// Base per-step exploration of every head, and the epsilon-greedy baseline.
    pub epsilon: f64,
    pub temperature: f64,
    pub lr: f64,
    pub gamma: f64,
    pub optimism: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha_bar: DEFAULT_ALPHA_BAR,
            rho_bar: DEFAULT_RHO_BAR,
            tau: DEFAULT_TAU,
            n: 5,
            lambda: 1.0,
            epsilon: 0.1,
            temperature: 1.0,
            lr: 0.1,
            gamma: 0.99,
            optimism: 0.0,
        }
    }
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    #[serde(alias = "N")]
    pub n_tasks: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub reward_mode: RewardMode,
    /// Defaults to `4 N` on chains and `4 (width + height)` on grids.
    #[serde(default)]
    pub horizon: Option<usize>,
    pub method: Method,
    #[serde(default)]
    pub ablations: Ablations,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    /// Total environment steps per seed.
    pub budget: u64,
    pub seeds: Vec<u64>,
    /// Synthetic chain-adjacency embeddings are generated when absent.
    #[serde(default)]
    pub embeddings_path: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Defaults to `budget / 50`.
    #[serde(default)]
    pub checkpoint_interval: Option<u64>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Training episodes per task pooled for the key-state distance metric.
    #[serde(default = "default_key_state_window")]
    pub key_state_window: usize,
    #[serde(default)]
    pub record_episodes: bool,
    #[serde(default)]
    pub trace: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_eval_episodes() -> usize {
    20
}

fn default_key_state_window() -> usize {
    50
}

impl ExperimentConfig {
    /// A chain config with every default applied.
    pub fn chain(n_tasks: usize, method: Method, budget: u64, seeds: Vec<u64>) -> Self {
        Self {
            env: EnvKind::Chain,
            n_tasks,
            grid: GridSpec::default(),
            reward_mode: RewardMode::Sparse,
            horizon: None,
            method,
            ablations: Ablations::default(),
            hyperparameters: Hyperparameters::default(),
            budget,
            seeds,
            embeddings_path: None,
            output_dir: default_output_dir(),
            checkpoint_interval: None,
            eval_episodes: default_eval_episodes(),
            key_state_window: default_key_state_window(),
            record_episodes: false,
            trace: false,
        }
    }

    /// A grid config with every default applied.
    pub fn grid(n_tasks: usize, method: Method, budget: u64, seeds: Vec<u64>) -> Self {
        Self {
            env: EnvKind::Grid,
            ..Self::chain(n_tasks, method, budget, seeds)
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.to_string();
            let key = match msg.strip_prefix("unknown field `").and_then(|rest| rest.split('`').next()) {
                Some(field) if path == "." || path.is_empty() => field.to_string(),
                Some(field) if !path.ends_with(field) => format!("{path}.{field}"),
                _ => path,
            };
            Error::config(key, msg)
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Label distinguishing conditions in output file names.
    pub fn condition_label(&self) -> String {
        if self.method == Method::MtLevy && self.ablations != Ablations::default() {
            format!("{}-{}", self.method, self.ablations.label())
        } else {
            self.method.to_string()
        }
    }

    pub fn effective_horizon(&self) -> usize {
        self.horizon.unwrap_or(match self.env {
            EnvKind::Chain => 4 * self.n_tasks,
            EnvKind::Grid => 4 * (self.grid.width + self.grid.height),
        })
    }

    pub fn effective_checkpoint_interval(&self) -> u64 {
        self.checkpoint_interval.unwrap_or(self.budget / 50).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyperparameters;
        if self.n_tasks == 0 {
            return Err(Error::config("n_tasks", "must be positive"));
        }
        if self.budget == 0 {
            return Err(Error::config("budget", "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        if self.method != Method::MtLevy && self.ablations != Ablations::default() {
            return Err(Error::config(
                "ablations",
                format!("ablation flags only apply to mt_levy, not {}", self.method),
            ));
        }
        if !(h.alpha_bar >= 0.0 && h.alpha_bar.is_finite()) {
            return Err(Error::config("hyperparameters.alpha_bar", "must be >= 0"));
        }
        if !(h.rho_bar > 0.0 && h.rho_bar < 1.0) {
            return Err(Error::config("hyperparameters.rho_bar", format!("must lie in (0, 1), got {}", h.rho_bar)));
        }
        if !(h.tau > 0.0 && h.tau <= 1.0) {
            return Err(Error::config("hyperparameters.tau", format!("must lie in (0, 1], got {}", h.tau)));
        }
        if h.n == 0 {
            return Err(Error::config("hyperparameters.n", "must be positive"));
        }
        if !(h.lambda > 0.0 && h.lambda.is_finite()) {
            return Err(Error::config("hyperparameters.lambda", "must be positive"));
        }
        if !(0.0..=1.0).contains(&h.epsilon) {
            return Err(Error::config("hyperparameters.epsilon", format!("must lie in [0, 1], got {}", h.epsilon)));
        }
        if !(h.temperature > 0.0 && h.temperature.is_finite()) {
            return Err(Error::config("hyperparameters.temperature", "must be positive"));
        }
        if !(h.lr > 0.0 && h.lr <= 1.0) {
            return Err(Error::config("hyperparameters.lr", format!("must lie in (0, 1], got {}", h.lr)));
        }
        if !(0.0..1.0).contains(&h.gamma) {
            return Err(Error::config("hyperparameters.gamma", format!("must lie in [0, 1), got {}", h.gamma)));
        }
        if !h.optimism.is_finite() {
            return Err(Error::config("hyperparameters.optimism", "must be finite"));
        }
        if self.horizon == Some(0) {
            return Err(Error::config("horizon", "must be positive"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be positive"));
        }
        if self.key_state_window == 0 {
            return Err(Error::config("key_state_window", "must be positive"));
        }
        if self.checkpoint_interval == Some(0) {
            return Err(Error::config("checkpoint_interval", "must be positive"));
        }
        if self.env == EnvKind::Grid {
            self.build_grid().map_err(|e| Error::config("grid", e.to_string()))?;
        }
        Ok(())
    }

    pub fn build_chain(&self) -> Result<ChainWorld> {
        ChainWorld::with_horizon(self.n_tasks, self.effective_horizon(), self.reward_mode)
    }

    pub fn build_grid(&self) -> Result<GridWorld> {
        let g = &self.grid;
        let goals = match &g.goals {
            Some(goals) => {
                if goals.len() != self.n_tasks {
                    return Err(Error::domain(format!(
                        "{} goals listed for {} tasks",
                        goals.len(),
                        self.n_tasks
                    )));
                }
                goals.clone()
            }
            None => GridWorld::default_goals(g.width, g.height, self.n_tasks)?,
        };
        GridWorld::with_horizon(g.width, g.height, g.start, goals, self.effective_horizon(), self.reward_mode)?
            .with_object_cell(g.object_cell)
    }
}

/// Reads and validates a JSON config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json_str(
            r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 200000, "seeds": [1]}"#,
        )
        .unwrap();
        assert_eq!(c.n_tasks, 8);
        assert_eq!(c.hyperparameters, Hyperparameters::default());
        assert_eq!(c.hyperparameters.alpha_bar, 1.0);
        assert_eq!(c.hyperparameters.rho_bar, 0.1);
        assert_eq!(c.hyperparameters.tau, 0.01);
        assert_eq!(c.hyperparameters.n, 5);
        assert_eq!(c.hyperparameters.lambda, 1.0);
        assert_eq!(c.effective_horizon(), 32);
        assert_eq!(c.effective_checkpoint_interval(), 4000);
        assert_eq!(c, ExperimentConfig::chain(8, Method::MtLevy, 200_000, vec![1]));
    }

    #[test]
    fn ablations_require_mt_levy() {
        let err = ExperimentConfig::from_json_str(
            r#"{"env": "chain", "N": 8, "method": "epsilon_greedy", "budget": 10, "seeds": [1],
                "ablations": {"no_behavior_sharing": true}}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(err), "ablations");
    }

    #[test]
    fn constraint_errors_name_the_key() {
        let err = ExperimentConfig::from_json_str(
            r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 10, "seeds": [1],
                "hyperparameters": {"rho_bar": 1.5}}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(err), "hyperparameters.rho_bar");
        let err =
            ExperimentConfig::from_json_str(r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 10, "seeds": []}"#)
                .unwrap_err();
        assert_eq!(key_of(err), "seeds");
        let err =
            ExperimentConfig::from_json_str(r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 0, "seeds": [1]}"#)
                .unwrap_err();
        assert_eq!(key_of(err), "budget");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = ExperimentConfig::from_json_str(
            r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 10, "seeds": [1], "bogus": 3}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(err), "bogus");
        let err = ExperimentConfig::from_json_str(
            r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 10, "seeds": [1],
                "hyperparameters": {"rhobar": 0.2}}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(err), "hyperparameters.rhobar");
    }

    #[test]
    fn type_mismatches_name_the_key() {
        let err = ExperimentConfig::from_json_str(
            r#"{"env": "chain", "N": 8, "method": "mt_levy", "budget": 10, "seeds": [1],
                "hyperparameters": {"tau": "fast"}}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(err), "hyperparameters.tau");
        let err =
            ExperimentConfig::from_json_str(r#"{"env": "chain", "N": "eight", "method": "mt_levy", "budget": 10, "seeds": [1]}"#)
                .unwrap_err();
        assert_eq!(key_of(err), "N");
        let err =
            ExperimentConfig::from_json_str(r#"{"env": "maze", "N": 8, "method": "mt_levy", "budget": 10, "seeds": [1]}"#)
                .unwrap_err();
        assert_eq!(key_of(err), "env");
    }

    #[test]
    fn grid_layouts_are_validated() {
        let ok = ExperimentConfig::from_json_str(
            r#"{"env": "grid", "N": 2, "method": "ez_greedy", "budget": 10, "seeds": [1],
                "grid": {"width": 5, "height": 5, "goals": [[4, 4], [4, 0]]}}"#,
        )
        .unwrap();
        assert_eq!(ok.effective_horizon(), 40);
        let err = ExperimentConfig::from_json_str(
            r#"{"env": "grid", "N": 3, "method": "ez_greedy", "budget": 10, "seeds": [1],
                "grid": {"width": 5, "height": 5, "goals": [[4, 4], [4, 0]]}}"#,
        )
        .unwrap_err();
        assert_eq!(key_of(err), "grid");
    }

    #[test]
    fn labels_include_ablations() {
        let mut c = ExperimentConfig::chain(4, Method::MtLevy, 10, vec![1]);
        assert_eq!(c.condition_label(), "mt_levy");
        c.ablations.no_temporal_extension = true;
        assert_eq!(c.condition_label(), "mt_levy-no_temporal_extension");
    }
}
