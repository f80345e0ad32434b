use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mtlevy::embeddings::{save_embeddings, synthetic_chain_embeddings};
use mtlevy::harness::{load_config, run_experiment, summarize_dir};
use mtlevy::heavy_tail::{random_walk, StepDistribution};
use mtlevy::Error;

#[derive(Parser)]
#[command(name = "mtlevy", version, about = "Multi-task exploration experiments on tabular environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write metrics, Q-tables and optional traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed list, e.g. `1,2,3`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Aggregate a directory of metrics files into one JSON summary.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a 2D random walk and write its points as CSV.
    Walk {
        /// `pareto:α=1`, `pareto:alpha=2,lambda=1`, `cauchy`, `gaussian` or `constant:1`.
        #[arg(long)]
        dist: StepDistribution,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write synthetic task embeddings whose neighbors follow chain adjacency.
    GenEmbeddings {
        #[arg(long)]
        n_tasks: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn execute(command: Command) -> mtlevy::Result<()> {
    match command {
        Command::Run {
            config,
            seeds,
            out,
            workers,
        } => {
            let mut config = load_config(&config).map_err(|e| match e {
                Error::Io { .. } => Error::Config {
                    key: "--config".into(),
                    message: e.to_string(),
                },
                other => other,
            })?;
            if let Some(seeds) = seeds {
                config.seeds = seeds;
            }
            if let Some(out) = out {
                config.output_dir = out;
            }
            config.validate()?;
            for seed in run_experiment(&config, workers)? {
                println!("seed {}: {} steps -> {}", seed.seed, seed.total_steps, seed.metrics.display());
            }
        }
        Command::Summarize { input, out } => {
            let summary = summarize_dir(&input, &out)?;
            for (label, c) in &summary.conditions {
                println!("{label}: final {:.3}, auc {:.1} over {} seeds", c.final_mean, c.auc, c.seeds.len());
            }
        }
        Command::Walk { dist, steps, seed, out } => {
            let walk = random_walk(&dist, steps, seed);
            walk.save_csv(&out)?;
            println!("{dist}: {} steps, path length {:.1}", walk.n_steps(), walk.path_length());
        }
        Command::GenEmbeddings {
            n_tasks,
            dim,
            seed,
            out,
        } => {
            save_embeddings(&synthetic_chain_embeddings(n_tasks, dim, seed)?, &out)?;
        }
    }
    Ok(())
}
