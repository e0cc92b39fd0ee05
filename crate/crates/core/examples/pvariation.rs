//! Exact p-variation of a path and its second level, the inhomogeneous rough
//! path distance and the 2D variation of a covariance.

use roughswitch::gaussian::{cov_grid, interpolate_on_grid, sample, GaussianSpec, RngSeed};
use roughswitch::lift_piecewise_linear;
use roughswitch::variation::{
    cov_2d_variation, path_p_variation, rho_pvar_components, second_level_p_variation, Cov2dMode,
};
use roughswitch::IntervalIdx;

fn main() -> roughswitch::Result<()> {
    let spec = GaussianSpec::brownian(1, 1.0)?;
    let x = sample(&spec, 2048, RngSeed::new(2, 0))?;
    let iv = x.full_interval();
    for p in [2.1, 2.5, 3.0] {
        let first = path_p_variation(&x, p, iv)?;
        println!("p = {p}: ‖X‖ = {:.4} with {} partition points", first.value, first.optimal_partition.len());
    }

    let rx = lift_piecewise_linear(&x)?;
    println!("‖X2‖_(p/2) at p = 2.5: {:.4}", second_level_p_variation(&rx, 2.5, iv)?.value);

    for lambda in [16, 64, 256] {
        let rl = lift_piecewise_linear(&interpolate_on_grid(&x, lambda)?)?;
        let (a, b) = rho_pvar_components(&rx, &rl, 2.5, iv)?;
        println!("λ = {lambda:>3}: ρ components {a:.4} / {b:.4}");
    }

    let fbm = GaussianSpec::fbm(0.3, 1, 1.0)?;
    let grid = cov_grid(&fbm, &roughswitch::SamplePath::uniform_times(8, 1.0))?;
    let all = IntervalIdx::new(0, 8)?;
    let res = cov_2d_variation(&grid, 1.0 / (2.0 * 0.3), all, all, Cov2dMode::default())?;
    println!("fBm H = 0.3 covariance: ρ-variation {:.4} (exact: {})", res.value, res.exact);
    Ok(())
}
