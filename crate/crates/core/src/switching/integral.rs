//! Compensated Riemann sums for regime-switching integrands.

use super::jumps::JumpTrajectory;
use crate::error::{Error, Result};
use crate::lift::{ControlledPath, Level2RoughPath};
use crate::path::SamplePath;

/// `∫ Y^{J_u} d𝐗_u` as the running sum of `Y_u X_{u,v} + Y'_u X2_{u,v}` over
/// the grid of `rp` with every jump time inserted.
///
/// Each integrand takes values in `L(R^d, R^m)`, stored row-major as a path of
/// dimension `m·d`; its derivative entry `((a·d + j)·d + i)` is the derivative
/// of entry `(a, j)` in direction `i`. The regime is read at the left endpoint
/// of each step. Integrand values at inserted jump times are interpolated
/// linearly from the integrand's own grid.
pub fn switching_rough_integral(
    integrands: &[ControlledPath<'_>],
    rp: &Level2RoughPath,
    jumps: &JumpTrajectory,
) -> Result<SamplePath> {
    let first = integrands.first().ok_or_else(|| Error::InvalidParameter("no integrands".into()))?;
    let d = rp.dim();
    let md = first.value().dim();
    if md % d != 0 {
        return Err(Error::DimensionMismatch { expected: d * (md / d).max(1), got: md });
    }
    let m = md / d;
    for ig in integrands {
        if ig.reference().base() != rp.base() {
            return Err(Error::GridMismatch("integrand is controlled by a different path".into()));
        }
        if ig.value().dim() != md {
            return Err(Error::DimensionMismatch { expected: md, got: ig.value().dim() });
        }
    }
    if let Some(&s) = jumps.states().iter().find(|&&s| s >= integrands.len()) {
        return Err(Error::InvalidParameter(format!("state {s} has no integrand ({} given)", integrands.len())));
    }
    let refined = rp.refine(jumps.jump_times())?;
    let times = refined.times();
    let n = refined.steps();
    let mut acc = vec![0.0; m];
    let mut values = Vec::with_capacity((n + 1) * m);
    values.extend_from_slice(&acc);
    let mut orig = 0;
    for k in 0..n {
        let t = times[k];
        let ig = &integrands[jumps.state_at(t)];
        while orig + 1 < rp.times().len() && rp.times()[orig + 1] <= t {
            orig += 1;
        }
        let (y, dy) = if rp.times()[orig] == t {
            (ig.value().point(orig).to_vec(), ig.derivative().point(orig).to_vec())
        } else {
            (ig.value().value_at(t), ig.derivative().value_at(t))
        };
        let a = refined.base().point(k);
        let b = refined.base().point(k + 1);
        let x2 = refined.step_second(k);
        for (out, row) in acc.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..d {
                s += y[out * d + j] * (b[j] - a[j]);
                for i in 0..d {
                    s += dy[(out * d + j) * d + i] * x2[i * d + j];
                }
            }
            *row += s;
        }
        values.extend_from_slice(&acc);
    }
    SamplePath::new(times.to_vec(), values, m)
}
