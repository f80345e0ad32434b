use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{read_metrics_csv, MetricsRow};
use super::run::write_atomic;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub step: u64,
    /// Across seeds, of each seed's task-mean `eval_success`.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<CheckpointStats>,
    /// Trapezoid-rule area under the mean curve, in success x steps.
    pub auc: f64,
    pub final_mean: f64,
    /// Seed-averaged final success of each task, in task order.
    pub final_task_success: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub conditions: BTreeMap<String, ConditionSummary>,
}

/// Metrics of one seed of one condition.
#[derive(Debug, Clone)]
pub struct SeedMetrics {
    pub label: String,
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
}

/// Splits `metrics_<label>_seed<k>.csv` into label and seed.
pub fn parse_metrics_file_name(name: &str) -> Option<(String, u64)> {
    let body = name.strip_prefix("metrics_")?.strip_suffix(".csv")?;
    let (label, seed) = body.rsplit_once("_seed")?;
    Some((label.to_string(), seed.parse().ok()?))
}

/// Loads every `metrics_*.csv` in `dir`, sorted by file name.
pub fn load_metrics_dir(dir: &Path) -> Result<Vec<SeedMetrics>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).and_then(parse_metrics_file_name).is_some())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let (label, seed) = parse_metrics_file_name(name).expect("filtered above");
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let rows = read_metrics_csv(BufReader::new(file), &path)?;
            Ok(SeedMetrics { label, seed, rows })
        })
        .collect()
}

/// Per-checkpoint mean over tasks, as `(step, mean)` pairs.
fn seed_curve(m: &SeedMetrics) -> Vec<(u64, f64)> {
    let mut by_step: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for r in &m.rows {
        let e = by_step.entry(r.step).or_default();
        e.0 += r.eval_success;
        e.1 += 1;
    }
    by_step.into_iter().map(|(s, (sum, k))| (s, sum / k as f64)).collect()
}

/// Trapezoid rule over `(x, y)` points.
pub fn trapezoid_auc(points: &[(u64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as f64 * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

pub fn summarize(runs: &[SeedMetrics]) -> Result<Summary> {
    if runs.is_empty() {
        return Err(Error::Usage("no metrics files to summarize".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&SeedMetrics>> = BTreeMap::new();
    for r in runs {
        groups.entry(&r.label).or_default().push(r);
    }
    let mut conditions = BTreeMap::new();
    for (label, mut seeds) in groups {
        seeds.sort_by_key(|m| m.seed);
        let curves: Vec<Vec<(u64, f64)>> = seeds.iter().map(|m| seed_curve(m)).collect();
        let grid: Vec<u64> = curves[0].iter().map(|p| p.0).collect();
        let tasks = task_list(seeds[0]);
        for (m, c) in seeds.iter().zip(&curves).skip(1) {
            if c.iter().map(|p| p.0).ne(grid.iter().copied()) || task_list(m) != tasks {
                return Err(Error::Invariant(format!(
                    "condition {label}: seed {} checkpoint grid differs from seed {}",
                    m.seed, seeds[0].seed
                )));
            }
        }
        let checkpoints: Vec<CheckpointStats> = grid
            .iter()
            .enumerate()
            .map(|(k, &step)| {
                let vals: Vec<f64> = curves.iter().map(|c| c[k].1).collect();
                CheckpointStats {
                    step,
                    mean: vals.iter().sum::<f64>() / vals.len() as f64,
                    min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                    max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        let mean_curve: Vec<(u64, f64)> = checkpoints.iter().map(|c| (c.step, c.mean)).collect();
        let last = *grid.last().unwrap_or(&0);
        let mut final_task_success = vec![0.0; tasks.len()];
        for m in &seeds {
            for r in m.rows.iter().filter(|r| r.step == last) {
                let pos = tasks.binary_search(&r.task.0).expect("task grids checked");
                final_task_success[pos] += r.eval_success / seeds.len() as f64;
            }
        }
        conditions.insert(
            label.to_string(),
            ConditionSummary {
                seeds: seeds.iter().map(|m| m.seed).collect(),
                auc: trapezoid_auc(&mean_curve),
                final_mean: checkpoints.last().map_or(0.0, |c| c.mean),
                checkpoints,
                final_task_success,
            },
        );
    }
    Ok(Summary { conditions })
}

fn task_list(m: &SeedMetrics) -> Vec<usize> {
    let mut t: Vec<usize> = m.rows.iter().map(|r| r.task.0).collect();
    t.sort_unstable();
    t.dedup();
    t
}

/// Summarizes a directory of metrics files into one JSON document.
pub fn summarize_dir(input: &Path, output: &Path) -> Result<Summary> {
    let summary = summarize(&load_metrics_dir(input)?)?;
    write_atomic(output, |w| Ok(serde_json::to_writer_pretty(w, &summary)?))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TaskId;

    fn seed(label: &str, seed: u64, points: &[(u64, f64)]) -> SeedMetrics {
        SeedMetrics {
            label: label.into(),
            seed,
            rows: points
                .iter()
                .map(|&(step, s)| MetricsRow {
                    step,
                    task: TaskId(1),
                    eval_success: s,
                    tracked_rho: 0.0,
                    alpha: 2.0,
                    coverage: 0,
                    key_dist_low1pct: None,
                })
                .collect(),
        }
    }

    #[test]
    fn file_names() {
        assert_eq!(parse_metrics_file_name("metrics_mt_levy_seed3.csv"), Some(("mt_levy".into(), 3)));
        assert_eq!(
            parse_metrics_file_name("metrics_mt_levy-no_temporal_extension_seed12.csv"),
            Some(("mt_levy-no_temporal_extension".into(), 12))
        );
        assert_eq!(parse_metrics_file_name("qtable_mt_levy_seed3.json"), None);
        assert_eq!(parse_metrics_file_name("metrics_x_seedz.csv"), None);
    }

    #[test]
    fn single_seed_collapses() {
        let s = summarize(&[seed("a", 1, &[(0, 0.0), (10, 0.5)])]).unwrap();
        let c = &s.conditions["a"].checkpoints[1];
        assert_eq!((c.mean, c.min, c.max), (0.5, 0.5, 0.5));
    }

    #[test]
    fn mean_min_max_across_seeds() {
        let runs = [
            seed("a", 1, &[(0, 0.2)]),
            seed("a", 2, &[(0, 0.4)]),
            seed("a", 3, &[(0, 0.6)]),
        ];
        let c = &summarize(&runs).unwrap().conditions["a"].checkpoints[0];
        assert!((c.mean - 0.4).abs() < 1e-12);
        assert_eq!((c.min, c.max), (0.2, 0.6));
    }

    #[test]
    fn auc_of_constant_curve_is_budget() {
        let s = summarize(&[seed("a", 1, &[(0, 1.0), (40, 1.0), (100, 1.0)])]).unwrap();
        assert_eq!(s.conditions["a"].auc, 100.0);
        assert_eq!(trapezoid_auc(&[(0, 0.0), (10, 1.0)]), 5.0);
    }

    #[test]
    fn inconsistent_grids_fail() {
        let runs = [seed("a", 1, &[(0, 0.2), (10, 0.3)]), seed("a", 2, &[(0, 0.2), (20, 0.3)])];
        assert!(summarize(&runs).is_err());
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn conditions_are_grouped() {
        let runs = [seed("a", 1, &[(0, 1.0)]), seed("b", 1, &[(0, 0.0)]), seed("a", 2, &[(0, 0.5)])];
        let s = summarize(&runs).unwrap();
        assert_eq!(s.conditions.len(), 2);
        assert_eq!(s.conditions["a"].seeds, vec![1, 2]);
        assert_eq!(s.conditions["a"].final_task_success, vec![0.75]);
    }
}
