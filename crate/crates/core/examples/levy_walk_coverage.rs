//! Unique unit cells visited by 2D random walks with heavy-tailed and
//! Gaussian step lengths. Pass a path to also dump one walk as CSV.
//!
//! cargo run --example levy_walk_coverage [walk.csv]

use std::path::PathBuf;

use mtlevy::heavy_tail::{coverage_cells, random_walk, StepDistribution};

fn main() -> mtlevy::Result<()> {
    let dists = ["pareto:alpha=1", "pareto:alpha=2", "pareto:alpha=3", "cauchy", "gaussian"];
    println!("{:<24} {:>10} {:>14}", "steps", "cells", "path length");
    for spec in dists {
        let dist: StepDistribution = spec.parse()?;
        let mut cells = Vec::new();
        let mut lengths = Vec::new();
        for seed in 0..30 {
            let walk = random_walk(&dist, 10_000, seed);
            cells.push(coverage_cells(&walk, 1.0)?);
            lengths.push(walk.path_length());
        }
        cells.sort_unstable();
        lengths.sort_by(f64::total_cmp);
        println!("{:<24} {:>10} {:>14.0}", dist.to_string(), cells[15], lengths[15]);
    }

    if let Some(path) = std::env::args().nth(1).map(PathBuf::from) {
        random_walk(&"pareto:alpha=1".parse()?, 10_000, 7).save_csv(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
