//! Lift a sampled Brownian path, check Chen's relation and switch to the Itô lift.

use roughswitch::gaussian::{sample, GaussianSpec, RngSeed};
use roughswitch::lift_piecewise_linear;

fn main() -> roughswitch::Result<()> {
    let spec = GaussianSpec::brownian(2, 1.0)?;
    let path = sample(&spec, 64, RngSeed::new(1, 0))?;
    let rp = lift_piecewise_linear(&path)?;

    let report = rp.check_chen(1e-10);
    println!("Chen: passed={} worst={:.2e} over {} triples", report.passed, report.chen_violation, report.triples_checked);

    let full = path.full_interval();
    let geo = rp.eval_second(full)?;
    let ito = rp.to_ito()?.eval_second(full)?;
    println!("geometric X2(0,T) = {:?}", geo.rows());
    println!("Itô       X2(0,T) = {:?}", ito.rows());
    println!("Lévy area         = {:.6}", geo.antisym().get(0, 1));

    let refined = rp.refine(&[0.123, 0.777])?;
    println!("refined grid: {} -> {} points", rp.times().len(), refined.times().len());
    Ok(())
}
