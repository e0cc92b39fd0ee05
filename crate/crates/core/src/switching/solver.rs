//! Second-order RDE steps and regime-switching solutions by concatenation.

use serde::{Deserialize, Serialize};

use super::fields::{VectorField, VectorFieldFamily};
use super::jumps::JumpTrajectory;
use crate::error::{Error, Result};
use crate::lift::Level2RoughPath;
use crate::path::{IntervalIdx, SamplePath};

/// Largest state magnitude accepted before a solution counts as blown up.
pub const BLOW_UP_LIMIT: f64 = 1e100;

struct Workspace {
    v: Vec<f64>,
    jac: Vec<f64>,
    dx: Vec<f64>,
    next: Vec<f64>,
}

impl Workspace {
    fn new(e: usize, d: usize) -> Self {
        Self { v: vec![0.0; e * d], jac: vec![0.0; e * d * e], dx: vec![0.0; d], next: vec![0.0; e] }
    }
}

/// One step `y += V(y) ΔX + Σ_{i,j} (DV_j · V_i)(y) X2^{i,j}` over grid step `k`.
fn step(field: &dyn VectorField, rp: &Level2RoughPath, k: usize, y: &mut [f64], ws: &mut Workspace) {
    let (e, d) = (field.state_dim(), field.noise_dim());
    let a = rp.base().point(k);
    let b = rp.base().point(k + 1);
    for i in 0..d {
        ws.dx[i] = b[i] - a[i];
    }
    let x2 = rp.step_second(k);
    field.eval(y, &mut ws.v);
    field.jacobian(y, &mut ws.jac);
    for c in 0..e {
        let mut acc = y[c];
        for i in 0..d {
            acc += ws.v[c * d + i] * ws.dx[i];
        }
        for j in 0..d {
            let grad = &ws.jac[(c * d + j) * e..(c * d + j + 1) * e];
            for i in 0..d {
                let x = x2[i * d + j];
                if x != 0.0 {
                    let dv: f64 = (0..e).map(|m| grad[m] * ws.v[m * d + i]).sum();
                    acc += dv * x;
                }
            }
        }
        ws.next[c] = acc;
    }
    y.copy_from_slice(&ws.next);
}

fn check_dims(field: &dyn VectorField, rp: &Level2RoughPath, y0: &[f64]) -> Result<()> {
    if field.noise_dim() != rp.dim() {
        return Err(Error::DimensionMismatch { expected: rp.dim(), got: field.noise_dim() });
    }
    if field.state_dim() != y0.len() {
        return Err(Error::DimensionMismatch { expected: field.state_dim(), got: y0.len() });
    }
    Ok(())
}

/// Solves `dY = V(Y) dX` on the grid of `rp` over `iv`, one second-order step
/// per grid interval. The returned path is rebased to start at time 0.
pub fn solve_rde(field: &dyn VectorField, rp: &Level2RoughPath, y0: &[f64], iv: IntervalIdx) -> Result<SamplePath> {
    check_dims(field, rp, y0)?;
    iv.check(rp.steps() + 1)?;
    let e = y0.len();
    let mut ws = Workspace::new(e, rp.dim());
    let mut y = y0.to_vec();
    let mut values = Vec::with_capacity((iv.len() + 1) * e);
    values.extend_from_slice(&y);
    for k in iv.lo..iv.hi {
        step(field, rp, k, &mut y, &mut ws);
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_LIMIT) {
            return Err(Error::BlowUp { index: k + 1, last_valid: k });
        }
        values.extend_from_slice(&y);
    }
    let t0 = rp.times()[iv.lo];
    let times = rp.times()[iv.lo..=iv.hi].iter().map(|t| t - t0).collect();
    SamplePath::new(times, values, e)
}

/// Solution of a regime-switching RDE on the jump-refined grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSolution {
    pub path: SamplePath,
    /// Inter-jump segment `k` of each grid index (the left endpoint's segment;
    /// a jump time belongs to the segment it starts).
    pub segment_index: Vec<usize>,
    /// Grid index of each jump time.
    pub jump_indices: Vec<usize>,
}

/// The driver refined so that every jump time is a grid point, together with
/// the grid index of each jump.
pub fn refine_at_jumps(rp: &Level2RoughPath, jumps: &JumpTrajectory) -> Result<(Level2RoughPath, Vec<usize>)> {
    let horizon = rp.base().horizon();
    if (jumps.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "jump horizon {} differs from driver horizon {horizon}",
            jumps.horizon()
        )));
    }
    let refined = rp.refine(jumps.jump_times())?;
    let times = refined.times();
    let indices = jumps
        .jump_times()
        .iter()
        .map(|&tau| {
            let k = times.partition_point(|&t| t < tau);
            // the refined grid holds tau up to the merge tolerance
            if k > 0 && (k == times.len() || (times[k - 1] - tau).abs() < (times[k] - tau).abs()) {
                k - 1
            } else {
                k
            }
        })
        .collect();
    Ok((refined, indices))
}

/// Solves on each inter-jump interval with the regime's field, starting each
/// piece from the previous endpoint, and concatenates.
pub fn solve_switching_rde(
    family: &VectorFieldFamily,
    rp: &Level2RoughPath,
    jumps: &JumpTrajectory,
    y0: &[f64],
) -> Result<SwitchingSolution> {
    if let Some(&s) = jumps.states().iter().find(|&&s| s >= family.regimes()) {
        return Err(Error::InvalidParameter(format!("state {s} has no vector field ({} regimes)", family.regimes())));
    }
    check_dims(family.field(0), rp, y0)?;
    let (refined, jump_indices) = refine_at_jumps(rp, jumps)?;
    let n = refined.steps();
    let e = y0.len();
    let mut ws = Workspace::new(e, refined.dim());
    let mut y = y0.to_vec();
    let mut values = Vec::with_capacity((n + 1) * e);
    values.extend_from_slice(&y);
    let mut segment_index = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..n {
        while seg < jump_indices.len() && jump_indices[seg] <= k {
            seg += 1;
        }
        segment_index.push(seg);
        let field = family.field(jumps.states()[seg]);
        step(field, &refined, k, &mut y, &mut ws);
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_LIMIT) {
            return Err(Error::BlowUp { index: k + 1, last_valid: k });
        }
        values.extend_from_slice(&y);
    }
    segment_index.push(seg);
    let path = SamplePath::new(refined.times().to_vec(), values, e)?;
    Ok(SwitchingSolution { path, segment_index, jump_indices })
}
