//! Twelve chain tasks where task i needs i consecutive right moves. Sharing
//! behavior from solved neighbors solves them all; per-step epsilon-greedy
//! stalls after the first few.
//!
//! cargo run --release --example chain_behavior_sharing

use mtlevy::harness::{run_seed, ExperimentConfig, Method};

fn main() -> mtlevy::Result<()> {
    for method in [Method::MtLevy, Method::EpsilonGreedy] {
        let config = ExperimentConfig::chain(12, method, 500_000, vec![1]);
        let run = run_seed(&config, 1)?;
        let finals: Vec<String> = run.final_success().iter().map(|s| format!("{s:.0}")).collect();
        let solved_at: Vec<String> = (1..=12)
            .map(|t| {
                run.metrics
                    .iter()
                    .find(|r| r.task.0 == t && r.eval_success >= 0.9)
                    .map_or("-".into(), |r| format!("{}k", r.step / 1000))
            })
            .collect();
        println!("{method}");
        println!("  final success per task: {}", finals.join(" "));
        println!("  first solved at:        {}", solved_at.join(" "));
    }
    Ok(())
}
