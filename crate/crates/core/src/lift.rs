//! Level-2 rough paths built from sampled paths.
//!
//! A [`Level2RoughPath`] keeps the base path and one second-level tensor per
//! grid step. The second level over any grid interval is rebuilt from the
//! per-step tensors with Chen's relation
//! `X2(s,u) = X2(s,t) + X2(t,u) + X(s,t) ⊗ X(t,u)`, so memory stays
//! `O(n d^2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{add_outer, merge_grids, outer, same_grid, IntervalIdx, SamplePath, Tensor2};

/// Which lift convention produced the second level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Symmetric part equals `½ X ⊗ X` (Stratonovich / piecewise-linear lifts).
    Geometric,
    /// Geometric lift minus the Brownian bracket `½ (t - s) I`.
    Ito,
}

/// A path together with its second level on every grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct Level2RoughPath {
    base: SamplePath,
    steps: Vec<f64>,
    flavor: Flavor,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    flavor: Flavor,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    second_steps: Vec<Vec<Vec<f64>>>,
}

impl Serialize for Level2RoughPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Envelope {
            flavor: self.flavor,
            times: self.base.times().to_vec(),
            values: self.base.rows().map(<[f64]>::to_vec).collect(),
            second_steps: (0..self.steps()).map(|k| self.step_tensor(k).rows()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Level2RoughPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let env = Envelope::deserialize(d)?;
        let base = SamplePath::from_rows(env.times, &env.values).map_err(serde::de::Error::custom)?;
        let steps = env
            .second_steps
            .iter()
            .map(|rows| Tensor2::from_rows(rows))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Level2RoughPath::from_parts(base, &steps, env.flavor).map_err(serde::de::Error::custom)
    }
}

/// Closed-form lift of the linear interpolant of `path`: every step carries
/// `½ ΔX ⊗ ΔX`, which is exact for a straight segment.
pub fn lift_piecewise_linear(path: &SamplePath) -> Result<Level2RoughPath> {
    let n = path.steps();
    if n == 0 {
        return Err(Error::DegeneratePath);
    }
    let d = path.dim();
    let mut steps = vec![0.0; n * d * d];
    let mut delta = vec![0.0; d];
    for k in 0..n {
        for (i, slot) in delta.iter_mut().enumerate() {
            *slot = path.point(k + 1)[i] - path.point(k)[i];
        }
        let block = &mut steps[k * d * d..(k + 1) * d * d];
        for i in 0..d {
            for j in 0..d {
                block[i * d + j] = 0.5 * delta[i] * delta[j];
            }
        }
    }
    Ok(Level2RoughPath { base: path.clone(), steps, flavor: Flavor::Geometric })
}

impl Level2RoughPath {
    pub fn from_parts(base: SamplePath, second_steps: &[Tensor2], flavor: Flavor) -> Result<Self> {
        let d = base.dim();
        if base.steps() == 0 {
            return Err(Error::DegeneratePath);
        }
        if second_steps.len() != base.steps() {
            return Err(Error::InvalidPath(format!(
                "{} second-level steps for {} path steps",
                second_steps.len(),
                base.steps()
            )));
        }
        if let Some(t) = second_steps.iter().find(|t| t.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: t.dim() });
        }
        let steps: Vec<f64> = second_steps.iter().flat_map(|t| t.as_slice().iter().copied()).collect();
        if steps.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite second level".into()));
        }
        Ok(Self { base, steps, flavor })
    }

    pub fn base(&self) -> &SamplePath {
        &self.base
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn steps(&self) -> usize {
        self.base.steps()
    }

    pub fn times(&self) -> &[f64] {
        self.base.times()
    }

    /// Row-major second level of step `k`.
    pub fn step_second(&self, k: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.steps[k * dd..(k + 1) * dd]
    }

    pub fn step_tensor(&self, k: usize) -> Tensor2 {
        Tensor2::from_flat(self.dim(), self.step_second(k).to_vec())
    }

    /// Second level over `[t_lo, t_hi]` by left-to-right Chen accumulation.
    pub fn eval_second(&self, iv: IntervalIdx) -> Result<Tensor2> {
        iv.check(self.base.len())?;
        let d = self.dim();
        let mut sweep = SecondSweep::new(self, iv.lo);
        for _ in iv.lo..iv.hi {
            sweep.advance();
        }
        Ok(Tensor2::from_flat(d, sweep.second().to_vec()))
    }

    /// Itô-flavoured copy: subtracts `½ (t_{k+1} - t_k) I` from each step.
    pub fn to_ito(&self) -> Result<Level2RoughPath> {
        if self.flavor != Flavor::Geometric {
            return Err(Error::InvalidParameter("Itô correction needs a geometric lift".into()));
        }
        let d = self.dim();
        let mut out = self.clone();
        let times = self.times();
        for k in 0..self.steps() {
            let h = times[k + 1] - times[k];
            let block = &mut out.steps[k * d * d..(k + 1) * d * d];
            for i in 0..d {
                block[i * d + i] -= 0.5 * h;
            }
        }
        out.flavor = Flavor::Ito;
        Ok(out)
    }

    /// Inserts extra grid times. Base values come from linear interpolation;
    /// a split step keeps `½ a ⊗ a` on each piece and shares the step's
    /// excess over `½ ΔX ⊗ ΔX` in proportion to elapsed time, which keeps
    /// Chen's relation exact over the original step.
    pub fn refine(&self, extra: &[f64]) -> Result<Level2RoughPath> {
        let horizon = self.base.horizon();
        if let Some(&t) = extra.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
            return Err(Error::InvalidParameter(format!("time {t} outside [0, {horizon}]")));
        }
        let tol = 1e-12 * horizon.max(1.0);
        let old = self.times();
        let mut grid = merge_grids(old, extra);
        if grid.len() == old.len() {
            return Ok(self.clone());
        }
        // snap to the original grid so shared points stay bit-identical
        let mut j = 0;
        for slot in grid.iter_mut() {
            while j + 1 < old.len() && old[j] < *slot - tol {
                j += 1;
            }
            if (old[j] - *slot).abs() <= tol {
                *slot = old[j];
            }
        }
        let d = self.dim();
        let dd = d * d;
        let mut values = Vec::with_capacity(grid.len() * d);
        let mut steps = Vec::with_capacity((grid.len() - 1) * dd);
        values.extend_from_slice(self.base.point(0));
        let mut g = 1;
        for k in 0..self.steps() {
            let (t0, t1) = (old[k], old[k + 1]);
            let x0 = self.base.point(k);
            let delta = self.base.increment_unchecked(k, k + 1);
            let mut excess = self.step_second(k).to_vec();
            for i in 0..d {
                for j in 0..d {
                    excess[i * d + j] -= 0.5 * delta[i] * delta[j];
                }
            }
            let mut prev_theta = 0.0;
            loop {
                let t = grid[g];
                let theta = if t == t1 { 1.0 } else { (t - t0) / (t1 - t0) };
                let frac = theta - prev_theta;
                let a: Vec<f64> = delta.iter().map(|v| v * frac).collect();
                let mut block = vec![0.0; dd];
                add_outer(&mut block, &a, &a);
                for (b, e) in block.iter_mut().zip(&excess) {
                    *b = 0.5 * *b + frac * e;
                }
                steps.extend(block);
                g += 1;
                if theta == 1.0 {
                    values.extend_from_slice(self.base.point(k + 1));
                    break;
                }
                values.extend(x0.iter().zip(&delta).map(|(x, dx)| x + theta * dx));
                prev_theta = theta;
            }
        }
        let times = grid;
        let base = SamplePath::new(times, values, d)?;
        Ok(Level2RoughPath { base, steps, flavor: self.flavor })
    }

    /// Space-time lift of `t ↦ (t, X_t)` in `R^{1+d}`: each step carries the
    /// linear-segment cross terms for the time coordinate; the `X` block is
    /// kept unchanged.
    pub fn augment_with_time(&self) -> Level2RoughPath {
        let d = self.dim();
        let e = d + 1;
        let times = self.times();
        let mut values = Vec::with_capacity(self.base.len() * e);
        for (k, row) in self.base.rows().enumerate() {
            values.push(times[k]);
            values.extend_from_slice(row);
        }
        let mut steps = Vec::with_capacity(self.steps() * e * e);
        for k in 0..self.steps() {
            let h = times[k + 1] - times[k];
            let dx = self.base.increment_unchecked(k, k + 1);
            let s = self.step_second(k);
            let mut block = vec![0.0; e * e];
            block[0] = 0.5 * h * h;
            for i in 0..d {
                block[i + 1] = 0.5 * h * dx[i];
                block[(i + 1) * e] = 0.5 * dx[i] * h;
                for j in 0..d {
                    block[(i + 1) * e + j + 1] = s[i * d + j];
                }
            }
            steps.extend(block);
        }
        let base = SamplePath::new(times.to_vec(), values, e).expect("valid augmented path");
        Level2RoughPath { base, steps, flavor: self.flavor }
    }

    /// Checks Chen's relation over index triples and the per-step flavor law.
    ///
    /// Exhaustive over all triples for grids with at most 200 steps,
    /// otherwise on a deterministic random sample of triples.
    pub fn check_chen(&self, tol: f64) -> ChenReport {
        let n = self.steps();
        let d = self.dim();
        let mut report = ChenReport {
            passed: true,
            chen_violation: 0.0,
            worst_triple: None,
            flavor_violation: 0.0,
            worst_step: None,
            triples_checked: 0,
        };

        // per-step law for the declared flavor
        for k in 0..n {
            let delta = self.base.increment_unchecked(k, k + 1);
            let h = self.times()[k + 1] - self.times()[k];
            let s = self.step_second(k);
            let mut worst = 0.0f64;
            for i in 0..d {
                for j in 0..d {
                    let sym = 0.5 * (s[i * d + j] + s[j * d + i]);
                    let mut expect = 0.5 * delta[i] * delta[j];
                    if self.flavor == Flavor::Ito && i == j {
                        expect -= 0.5 * h;
                    }
                    worst = worst.max((sym - expect).abs());
                }
            }
            if worst > report.flavor_violation {
                report.flavor_violation = worst;
                report.worst_step = Some(k);
            }
        }

        let mut record = |i: usize, j: usize, k: usize, lhs: &[f64], left: &[f64], right: &[f64]| {
            let a = self.base.increment_unchecked(i, j);
            let b = self.base.increment_unchecked(j, k);
            let mut worst = 0.0f64;
            for r in 0..d {
                for c in 0..d {
                    let rhs = left[r * d + c] + right[r * d + c] + a[r] * b[c];
                    worst = worst.max((lhs[r * d + c] - rhs).abs());
                }
            }
            report.triples_checked += 1;
            if worst > report.chen_violation {
                report.chen_violation = worst;
                report.worst_triple = Some((i, j, k));
            }
        };

        if n <= 200 {
            let table = SecondTable::new(self);
            for i in 0..=n {
                for j in i..=n {
                    for k in j..=n {
                        record(i, j, k, table.get(i, k), table.get(i, j), table.get(j, k));
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c4e4);
            for _ in 0..20_000 {
                let mut idx = [rng.random_range(0..=n), rng.random_range(0..=n), rng.random_range(0..=n)];
                idx.sort_unstable();
                let [i, j, k] = idx;
                let ev = |lo, hi| self.eval_second(IntervalIdx { lo, hi }).expect("valid interval");
                let (lhs, left, right) = (ev(i, k), ev(i, j), ev(j, k));
                record(i, j, k, lhs.as_slice(), left.as_slice(), right.as_slice());
            }
        }
        report.passed = report.chen_violation <= tol && report.flavor_violation <= tol;
        report
    }
}

/// Outcome of [`Level2RoughPath::check_chen`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChenReport {
    pub passed: bool,
    /// Largest absolute entrywise violation of Chen's relation.
    pub chen_violation: f64,
    pub worst_triple: Option<(usize, usize, usize)>,
    /// Largest deviation of a step's symmetric part from the flavor law.
    pub flavor_violation: f64,
    pub worst_step: Option<usize>,
    pub triples_checked: usize,
}

/// Incremental evaluation of `X2(lo, u)` and `X(lo, u)` for `u = lo, lo+1, ...`.
pub(crate) struct SecondSweep<'a> {
    rp: &'a Level2RoughPath,
    pos: usize,
    first: Vec<f64>,
    second: Vec<f64>,
    delta: Vec<f64>,
}

impl<'a> SecondSweep<'a> {
    pub(crate) fn new(rp: &'a Level2RoughPath, lo: usize) -> Self {
        let d = rp.dim();
        Self { rp, pos: lo, first: vec![0.0; d], second: vec![0.0; d * d], delta: vec![0.0; d] }
    }

    pub(crate) fn advance(&mut self) {
        let k = self.pos;
        let a = self.rp.base.point(k);
        let b = self.rp.base.point(k + 1);
        for (i, slot) in self.delta.iter_mut().enumerate() {
            *slot = b[i] - a[i];
        }
        add_outer(&mut self.second, &self.first, &self.delta);
        for (s, v) in self.second.iter_mut().zip(self.rp.step_second(k)) {
            *s += v;
        }
        for (f, dv) in self.first.iter_mut().zip(&self.delta) {
            *f += dv;
        }
        self.pos += 1;
    }

    pub(crate) fn second(&self) -> &[f64] {
        &self.second
    }
}

/// All `X2(i, j)` for `i <= j`, packed by rows.
struct SecondTable {
    n: usize,
    dd: usize,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl SecondTable {
    fn new(rp: &Level2RoughPath) -> Self {
        let n = rp.steps();
        let dd = rp.dim() * rp.dim();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut data = Vec::new();
        for i in 0..=n {
            offsets.push(data.len());
            let mut sweep = SecondSweep::new(rp, i);
            data.extend_from_slice(sweep.second());
            for _ in i..n {
                sweep.advance();
                data.extend_from_slice(sweep.second());
            }
        }
        Self { n, dd, offsets, data }
    }

    fn get(&self, i: usize, j: usize) -> &[f64] {
        debug_assert!(i <= j && j <= self.n);
        let start = self.offsets[i] + (j - i) * self.dd;
        &self.data[start..start + self.dd]
    }
}

/// A path `Y` in `R^e` controlled by a rough path, with Gubinelli derivative
/// `Y'` stored as a path of row-major `e × d` matrices.
#[derive(Debug, Clone)]
pub struct ControlledPath<'a> {
    value: SamplePath,
    derivative: SamplePath,
    reference: &'a Level2RoughPath,
}

impl<'a> ControlledPath<'a> {
    pub fn new(value: SamplePath, derivative: SamplePath, reference: &'a Level2RoughPath) -> Result<Self> {
        if value.times() != reference.times() || derivative.times() != reference.times() {
            return Err(Error::GridMismatch("controlled path and reference grids differ".into()));
        }
        let expected = value.dim() * reference.dim();
        if derivative.dim() != expected {
            return Err(Error::DimensionMismatch { expected, got: derivative.dim() });
        }
        Ok(Self { value, derivative, reference })
    }

    /// A constant path `c` with zero derivative.
    pub fn constant(c: &[f64], reference: &'a Level2RoughPath) -> Result<Self> {
        let times = reference.times().to_vec();
        let n = times.len();
        let value = SamplePath::new(times.clone(), c.repeat(n), c.len())?;
        let derivative = SamplePath::new(times, vec![0.0; n * c.len() * reference.dim()], c.len() * reference.dim())?;
        Self::new(value, derivative, reference)
    }

    /// The reference path itself, with identity derivative.
    pub fn identity(reference: &'a Level2RoughPath) -> Result<Self> {
        let d = reference.dim();
        let n = reference.base().len();
        let eye = Tensor2::identity(d);
        let derivative = SamplePath::new(reference.times().to_vec(), eye.as_slice().repeat(n), d * d)?;
        Self::new(reference.base().clone(), derivative, reference)
    }

    pub fn value(&self) -> &SamplePath {
        &self.value
    }

    pub fn derivative(&self) -> &SamplePath {
        &self.derivative
    }

    pub fn reference(&self) -> &Level2RoughPath {
        self.reference
    }

    /// `R_{s,t} = Y_{s,t} - Y'_s X_{s,t}`.
    pub fn remainder(&self, iv: IntervalIdx) -> Result<Vec<f64>> {
        iv.check(self.value.len())?;
        let dy = self.value.increment_unchecked(iv.lo, iv.hi);
        let dx = self.reference.base().increment_unchecked(iv.lo, iv.hi);
        let d = dx.len();
        let deriv = self.derivative.point(iv.lo);
        Ok(dy
            .iter()
            .enumerate()
            .map(|(a, y)| y - (0..d).map(|b| deriv[a * d + b] * dx[b]).sum::<f64>())
            .collect())
    }
}

/// Free-function form of [`ControlledPath::remainder`].
pub fn controlled_remainder(cp: &ControlledPath<'_>, iv: IntervalIdx) -> Result<Vec<f64>> {
    cp.remainder(iv)
}

/// Free-function form of [`Level2RoughPath::eval_second`].
pub fn eval_second(rp: &Level2RoughPath, iv: IntervalIdx) -> Result<Tensor2> {
    rp.eval_second(iv)
}

/// Entrywise difference of two second levels on a shared grid.
pub fn second_difference(x: &Level2RoughPath, y: &Level2RoughPath, iv: IntervalIdx) -> Result<Tensor2> {
    same_grid(x.base(), y.base())?;
    Ok(&x.eval_second(iv)? - &y.eval_second(iv)?)
}

/// `X(s,t) ⊗ X(s,t) / 2` for an interval of the base path.
pub fn half_square(path: &SamplePath, iv: IntervalIdx) -> Result<Tensor2> {
    let inc = path.increment(iv)?;
    Ok(outer(&inc, &inc)?.scale(0.5))
}
