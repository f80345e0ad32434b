//! The file-based workflow: load a JSON config, run its seeds on a worker
//! pool, then summarize the metrics directory.
//!
//! cargo run --release --example experiment_from_config [config.json] [out_dir]

use std::path::PathBuf;

use mtlevy::harness::{load_config, run_experiment, summarize_dir};

fn main() -> mtlevy::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/chain_small.json").into());
    let mut config = load_config(&path)?;
    if let Some(out) = args.next() {
        config.output_dir = PathBuf::from(out);
    }
    println!("{} on {:?}, {} seeds, label {}", config.method, config.env, config.seeds.len(), config.condition_label());
    for seed in run_experiment(&config, 0)? {
        println!("  seed {}: {} steps", seed.seed, seed.total_steps);
        for f in seed.files() {
            println!("    {}", f.display());
        }
    }
    let summary_path = config.output_dir.join("summary.json");
    let summary = summarize_dir(&config.output_dir, &summary_path)?;
    for (label, c) in &summary.conditions {
        println!("{label}: final {:.3}, auc {:.0}", c.final_mean, c.auc);
    }
    Ok(())
}
