//! Step the behavior controller by hand for one task whose two neighbors
//! are already solved, printing each decision and writing the trace CSV.
//!
//! cargo run --example controller_trace

use mtlevy::controller::{
    write_trace_csv, Ablations, ExplorationState, MtLevyController, PolicyTable, SuccessTracker, TraceRow,
};
use mtlevy::embeddings::CandidateIndexSet;
use mtlevy::variates::{RngVariates, Variates};
use mtlevy::TaskId;

/// Task `k` always plays action `k - 1`, so the source is visible in the action.
struct ByTask;

impl PolicyTable for ByTask {
    fn n_actions(&self) -> usize {
        4
    }

    fn act(&self, task: TaskId, _state: usize, _: &mut dyn Variates) -> usize {
        task.0 - 1
    }
}

fn main() -> mtlevy::Result<()> {
    let mut tracker = SuccessTracker::with_defaults(4)?;
    tracker.set_rho(TaskId(2), 0.6)?;
    tracker.set_rho(TaskId(3), 0.3)?;
    tracker.set_rho(TaskId(4), 0.05)?;
    let task = TaskId(1);
    let nearest = CandidateIndexSet {
        task,
        neighbors: TaskId::all(4).collect(),
    };
    let controller = MtLevyController::new(1.0, Ablations::default())?;
    let candidates: Vec<String> = controller
        .candidates(task, &tracker, &nearest)
        .iter()
        .map(|t| t.to_string())
        .collect();
    println!("alpha {:.1}, candidates {{{}}}", controller.alpha(task, &tracker), candidates.join(", "));

    let mut state = ExplorationState::new();
    let mut v = RngVariates::seed_from_u64(3);
    let mut rows = Vec::new();
    for t in 0..30 {
        let d = controller.step(&mut state, task, t, &tracker, &nearest, &ByTask, &mut v)?;
        println!(
            "t={t:<2} action {} from task {} counter {:>6.3}{}",
            d.action,
            d.source_task,
            d.counter,
            if d.explored { "  explore" } else { "" }
        );
        rows.push(TraceRow::new(t, task, &d));
    }
    let mut csv = Vec::new();
    write_trace_csv(&rows, &mut csv)?;
    println!("\n{}", String::from_utf8_lossy(&csv).lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
