//! How close exploration gets to each goal on a 15x15 grid before any task
//! is solved: the mean of the lowest 1% of per-step goal distances over the
//! last 50 training episodes, per checkpoint.
//!
//! cargo run --release --example gridworld_key_states

use mtlevy::harness::{run_seed, ExperimentConfig, Method};

fn main() -> mtlevy::Result<()> {
    for method in [Method::MtLevy, Method::EpsilonGreedy, Method::EzGreedy] {
        let config = ExperimentConfig::grid(6, method, 200_000, vec![1]);
        let run = run_seed(&config, 1)?;
        let rho_bar = config.hyperparameters.rho_bar;
        let mut by_step = std::collections::BTreeMap::<u64, Vec<f64>>::new();
        let mut cut = None;
        for r in &run.metrics {
            if r.tracked_rho > rho_bar {
                cut = cut.min(Some(r.step)).or(Some(r.step));
            }
            if let Some(d) = r.key_dist_low1pct {
                by_step.entry(r.step).or_default().push(d);
            }
        }
        let curve: Vec<f64> = by_step
            .iter()
            .filter(|(s, _)| cut.is_none_or(|c| **s < c))
            .map(|(_, v)| v.iter().sum::<f64>() / v.len() as f64)
            .collect();
        let mean = curve.iter().sum::<f64>() / curve.len().max(1) as f64;
        let coverage: f64 = run.final_rows().iter().map(|r| r.coverage as f64).sum::<f64>() / 6.0;
        println!(
            "{:<15} key distance {mean:.2} over {} checkpoints, mean cells visited {coverage:.0} of 225",
            method.to_string(),
            curve.len()
        );
    }
    Ok(())
}
