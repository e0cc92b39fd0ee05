//! Greedy partition of the p-variation control of a Brownian rough path.

use roughswitch::gaussian::{sample, GaussianSpec, RngSeed};
use roughswitch::greedy::greedy_sequence;
use roughswitch::lift_piecewise_linear;
use roughswitch::variation::pvar_control;

fn main() -> roughswitch::Result<()> {
    let spec = GaussianSpec::brownian(1, 1.0)?;
    let x = sample(&spec, 1024, RngSeed::new(3, 0))?;
    let rp = lift_piecewise_linear(&x)?;
    let w = pvar_control(&rp, 2.5)?;
    for alpha in [2.0, 1.0, 0.5, 0.25] {
        let g = greedy_sequence(&w, alpha, x.full_interval())?;
        let times: Vec<String> = g.taus.iter().map(|&k| format!("{:.3}", x.times()[k])).collect();
        println!("α = {alpha:<4}: N_α = {:>2}, times [{}]", g.n_alpha, times.join(", "));
    }
    Ok(())
}
