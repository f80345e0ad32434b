//! A task's success ratio, shape parameter and exploration switch over a
//! stream of episodes whose success probability ramps from 0 to 0.8.
//!
//! cargo run --example success_tracking

use mtlevy::controller::SuccessTracker;
use mtlevy::variates::{RngVariates, Variates};
use mtlevy::TaskId;

fn main() -> mtlevy::Result<()> {
    let mut tracker = SuccessTracker::with_defaults(1)?;
    let task = TaskId(1);
    let mut v = RngVariates::seed_from_u64(5);
    let mut switched_off = None;
    println!("episode  p(success)  rho     alpha      exploring");
    for episode in 0..1500 {
        let p = (episode as f64 / 1000.0).min(0.8);
        tracker.update(task, v.uniform() < p)?;
        if switched_off.is_none() && !tracker.exploration_enabled(task) {
            switched_off = Some(episode);
        }
        if episode % 100 == 0 {
            println!(
                "{episode:>7}  {p:>10.2}  {:.4}  {:>9.3e}  {}",
                tracker.rho(task),
                tracker.alpha(task),
                tracker.exploration_enabled(task)
            );
        }
    }
    match switched_off {
        Some(e) => println!("exploration first switched off after episode {e}"),
        None => println!("exploration never switched off"),
    }
    Ok(())
}
