//! The full controller against each single-component removal on the
//! twelve-task chain, three seeds each, summarized in memory.
//!
//! cargo run --release --example ablation_sweep

use rayon::prelude::*;

use mtlevy::controller::Ablations;
use mtlevy::harness::{run_seed, summarize, ExperimentConfig, Method, SeedMetrics};

fn main() -> mtlevy::Result<()> {
    let flags = [
        Ablations::default(),
        Ablations { no_behavior_sharing: true, ..Ablations::default() },
        Ablations { no_temporal_extension: true, ..Ablations::default() },
        Ablations { no_success_tracking: true, ..Ablations::default() },
    ];
    let jobs: Vec<(Ablations, u64)> = flags.iter().flat_map(|&a| [1, 2, 3].map(|s| (a, s))).collect();
    let runs: Vec<SeedMetrics> = jobs
        .par_iter()
        .map(|&(ablations, seed)| {
            let mut config = ExperimentConfig::chain(12, Method::MtLevy, 500_000, vec![seed]);
            config.ablations = ablations;
            let run = run_seed(&config, seed)?;
            Ok(SeedMetrics { label: ablations.label(), seed, rows: run.metrics })
        })
        .collect::<mtlevy::Result<_>>()?;
    let summary = summarize(&runs)?;
    println!("{:<24} {:>11} {:>9} {:>9}", "condition", "final mean", "min", "auc/B");
    for (label, c) in &summary.conditions {
        let last = c.checkpoints.last().expect("checkpoints");
        println!("{label:<24} {:>11.3} {:>9.3} {:>9.3}", c.final_mean, last.min, c.auc / 500_000.0);
    }
    Ok(())
}
