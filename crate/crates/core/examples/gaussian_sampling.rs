//! Brownian and fractional Brownian samples, written as CSV, and the uniform
//! L² convergence of their piecewise-linear interpolants.

use roughswitch::gaussian::{check_condition_approx, sample, GaussianSpec, RngSeed};

fn main() -> roughswitch::Result<()> {
    let fbm = GaussianSpec::fbm(0.35, 2, 1.0)?;
    let path = sample(&fbm, 16, RngSeed::new(4, 0))?;
    path.write_csv(std::io::stdout().lock())?;

    for spec in [GaussianSpec::brownian(1, 1.0)?, GaussianSpec::fbm(0.3, 1, 1.0)?] {
        let rep = check_condition_approx(&spec, 256, &[8, 16, 32, 64], 1000, 5)?;
        println!("{:?}: sup MSE {:?}, exponent {:.3}", spec.kind, rep.sup_mse, rep.exponent);
    }
    Ok(())
}
