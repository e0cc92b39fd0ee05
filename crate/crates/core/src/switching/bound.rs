//! Pathwise check of the Lipschitz estimate for switching solutions.

use serde::{Deserialize, Serialize};

use super::fields::VectorFieldFamily;
use super::jumps::JumpTrajectory;
use super::solver::solve_switching_rde;
use crate::error::{Error, Result};
use crate::greedy::n_alpha;
use crate::lift::Level2RoughPath;
use crate::path::{same_grid, sup_distance};
use crate::variation::{pvar_control, rho_pvar_metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBoundReport {
    /// `|Y - Y^λ|_∞` on the shared grid.
    pub lhs: f64,
    /// `ρ_{p-var}(X, X^λ)`.
    pub rho: f64,
    pub n_x: usize,
    pub n_xl: usize,
    pub n_jumps: usize,
    pub c: f64,
    /// `C² / (C - 1)`.
    pub k1: f64,
    /// `K₁ C^{N^J} ρ exp(C (N_X + N_Xλ))` at `c`.
    pub rhs: f64,
    pub holds: bool,
    /// Candidate `C` giving the tightest right-hand side, if the bound holds there.
    pub fitted_c: Option<f64>,
}

/// The bound's right-hand side for a given `C > 1`.
pub fn bound_rhs(c: f64, rho: f64, n_x: usize, n_xl: usize, n_jumps: usize) -> f64 {
    let k1 = c * c / (c - 1.0);
    k1 * c.powi(n_jumps as i32) * rho * (c * (n_x + n_xl) as f64).exp()
}

/// Increasing candidate constants from `1 + 1e-6` to `101`.
pub fn candidate_constants() -> Vec<f64> {
    (-60..=20).map(|k| 1.0 + 10f64.powf(k as f64 / 10.0)).collect()
}

/// Evaluates every ingredient of the estimate
/// `|Y - Y^λ|_∞ ≤ K₁ C^{N^J} ρ(X, X^λ) exp{C (N_α(X) + N_α(X^λ))}`
/// for two drivers on the same grid.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_bound(
    family: &VectorFieldFamily,
    x: &Level2RoughPath,
    xl: &Level2RoughPath,
    jumps: &JumpTrajectory,
    y0: &[f64],
    p: f64,
    alpha: f64,
    c: f64,
) -> Result<LipschitzBoundReport> {
    if !(c > 1.0) {
        return Err(Error::InvalidParameter(format!("C must exceed 1, got {c}")));
    }
    same_grid(x.base(), xl.base())?;
    let y = solve_switching_rde(family, x, jumps, y0)?;
    let yl = solve_switching_rde(family, xl, jumps, y0)?;
    let lhs = sup_distance(&y.path, &yl.path)?;
    let iv = x.base().full_interval();
    let rho = rho_pvar_metric(x, xl, p, iv)?;
    let n_x = n_alpha(&pvar_control(x, p)?, alpha, iv)?;
    let n_xl = n_alpha(&pvar_control(xl, p)?, alpha, iv)?;
    let n_jumps = jumps.n_jumps();
    let rhs = bound_rhs(c, rho, n_x, n_xl, n_jumps);
    let fitted_c = candidate_constants()
        .into_iter()
        .map(|k| (k, bound_rhs(k, rho, n_x, n_xl, n_jumps)))
        .filter(|&(_, r)| lhs <= r)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k);
    Ok(LipschitzBoundReport {
        lhs,
        rho,
        n_x,
        n_xl,
        n_jumps,
        c,
        k1: c * c / (c - 1.0),
        rhs,
        holds: lhs <= rhs,
        fitted_c,
    })
}
