//! Tails of the greedy count N_α for Brownian rough paths and their
//! piecewise-linear approximations.

use roughswitch::experiments::{tail_experiment, TailConfig};
use roughswitch::greedy::survival_counts;
use roughswitch::experiments::TailRaw;

fn main() -> roughswitch::Result<()> {
    let cfg = TailConfig { steps: 256, lambdas: vec![8, 32], ..TailConfig::default() };
    let (report, record) = tail_experiment(&cfg, 0)?;
    let raw: TailRaw = record.raw_as()?;
    for (u, count) in survival_counts(&raw.n_x) {
        println!("P(N_α > {u}) = {:.5}", count as f64 / raw.n_x.len() as f64);
    }
    match report.fit_x.fit() {
        Some(f) => println!("log-survival slope {:.3} (c = {:.3}), R² = {:.3}", f.slope, f.c, f.r_squared),
        None => println!("fit degenerate: {:?}", report.fit_x),
    }
    println!("overshoot per λ {:?}, dominated {}", report.overshoot, report.dominated);
    Ok(())
}
