//! Type-II Pareto duration draws: analytic tail vs inverse-CDF samples, and
//! how the shape parameter moves as a task's success ratio climbs.
//!
//! cargo run --example pareto_durations

use mtlevy::controller::compute_alpha;
use mtlevy::heavy_tail::ParetoII;
use mtlevy::variates::{RngVariates, Variates};

fn main() -> mtlevy::Result<()> {
    let n = 200_000;
    println!("alpha  P(c>1)  sampled  P(c>10)  sampled   median");
    for alpha in [1.0, 2.0, 3.0, 5.0] {
        let dist = ParetoII::new(alpha, 1.0)?;
        let mut v = RngVariates::seed_from_u64(1);
        let mut xs: Vec<f64> = (0..n).map(|_| dist.sample(v.uniform())).collect::<Result<_, _>>()?;
        xs.sort_by(f64::total_cmp);
        let tail = |t: f64| xs.iter().filter(|&&x| x > t).count() as f64 / n as f64;
        println!(
            "{alpha:>5}  {:.4}  {:.4}   {:.5}  {:.5}  {:.3}",
            dist.survival(1.0)?,
            tail(1.0),
            dist.survival(10.0)?,
            tail(10.0),
            xs[n / 2]
        );
    }

    println!("\nrho    alpha (alpha_bar = 1, rho_bar = 0.1)");
    for rho in [0.0, 0.025, 0.05, 0.075, 0.1] {
        println!("{rho:<6} {:.3}", compute_alpha(rho, 0.1, 1.0)?);
    }
    Ok(())
}
