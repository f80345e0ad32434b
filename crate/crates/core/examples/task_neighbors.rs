//! Candidate sets from task embeddings. Without arguments, synthetic
//! embeddings laid out along a chain; otherwise a `task_id,e0,...` CSV.
//!
//! cargo run --example task_neighbors [embeddings.csv] [n]

use mtlevy::embeddings::{load_embeddings, synthetic_chain_embeddings};

fn main() -> mtlevy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let store = match args.first() {
        Some(path) => load_embeddings(path)?,
        None => synthetic_chain_embeddings(10, 4, 0)?,
    };
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    println!("{} tasks, dim {}, n = {n} (self included)", store.n_tasks(), store.dim());
    for set in store.all_nearest(n.min(store.n_tasks()))? {
        let names: Vec<String> = set.neighbors.iter().map(|t| t.to_string()).collect();
        let far = set
            .neighbors
            .iter()
            .map(|&j| store.distance(set.task, j))
            .fold(0.0, f64::max);
        println!("task {:>2}: {{{}}}  d_n = {far:.3}", set.task, names.join(", "));
    }
    Ok(())
}
