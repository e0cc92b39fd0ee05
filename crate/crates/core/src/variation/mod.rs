//! p-variation of sampled paths and interval functions.
//!
//! All suprema are taken over partitions made of grid points. For the first
//! level of a piecewise-linear path this is the exact continuous-time value;
//! for second levels it is the grid convention used throughout the crate.

mod cov2d;
pub(crate) mod engine;

use serde::{Deserialize, Serialize};

pub use cov2d::{cov_2d_variation, rect_increment, Cov2dMode, Cov2dResult, CovGrid};

use crate::error::{Error, Result};
use crate::greedy::{Control, ControlScan};
use crate::lift::Level2RoughPath;
use crate::path::{same_grid, IntervalIdx, SamplePath};
use engine::{DpRun, FirstLevelNorm, SecondLevelNorm, TwoLevel, Tree};

/// p-variation seminorm together with an optimising partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationResult {
    /// `(sup_P Σ f(s_i, s_{i+1})^p)^{1/p}`.
    pub value: f64,
    pub optimal_partition: Vec<usize>,
    pub p: f64,
}

impl VariationResult {
    /// The optimal sum itself, `value^p`.
    pub fn power(&self) -> f64 {
        self.value.powf(self.p)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// p-variation of an arbitrary non-negative interval function on grid indices.
///
/// Dynamic programme `best[j] = max_{i<j} best[i] + f(i,j)^p` with
/// `O(m^2)` evaluations of `f`. Ties go to the partition with fewer points.
pub fn p_variation<F>(f: F, p: f64, iv: IntervalIdx) -> Result<VariationResult>
where
    F: Fn(usize, usize) -> f64,
{
    check_exponent(p)?;
    let m = iv.len();
    let mut best = vec![0.0f64; m + 1];
    let mut count = vec![0usize; m + 1];
    let mut back = vec![0usize; m + 1];
    for j in 1..=m {
        let mut cand = (f64::NEG_INFINITY, usize::MAX, 0);
        for i in (0..j).rev() {
            let v = f(iv.lo + i, iv.lo + j);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeIntervalValue { lo: iv.lo + i, hi: iv.lo + j, value: v });
            }
            let total = best[i] + v.powf(p);
            let c = count[i] + 1;
            if total > cand.0 || (total == cand.0 && c < cand.1) {
                cand = (total, c, i);
            }
        }
        best[j] = cand.0;
        count[j] = cand.1;
        back[j] = cand.2;
    }
    let mut partition = vec![m];
    let mut k = m;
    while k > 0 {
        k = back[k];
        partition.push(k);
    }
    partition.reverse();
    Ok(VariationResult {
        value: best[m].powf(1.0 / p),
        optimal_partition: partition.into_iter().map(|k| k + iv.lo).collect(),
        p,
    })
}

/// p-variation by enumerating every partition of the interval.
///
/// Exponential in the interval length; limited to intervals of at most
/// `max_points` grid points.
pub fn p_variation_enumerate<F>(f: F, p: f64, iv: IntervalIdx, max_points: usize) -> Result<VariationResult>
where
    F: Fn(usize, usize) -> f64,
{
    check_exponent(p)?;
    let m = iv.len();
    if m + 1 > max_points || m > 30 {
        return Err(Error::RectangleTooLarge { rows: m + 1, cols: 1, limit: max_points });
    }
    if m == 0 {
        return Ok(VariationResult { value: 0.0, optimal_partition: vec![iv.lo], p });
    }
    let interior = m - 1;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 0u64..(1u64 << interior) {
        let mut points = vec![iv.lo];
        points.extend((0..interior).filter(|b| mask >> b & 1 == 1).map(|b| iv.lo + b + 1));
        points.push(iv.hi);
        let mut total = 0.0;
        for w in points.windows(2) {
            let v = f(w[0], w[1]);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeIntervalValue { lo: w[0], hi: w[1], value: v });
            }
            total += v.powf(p);
        }
        if total > best.0 || (total == best.0 && points.len() < best.1.len()) {
            best = (total, points);
        }
    }
    Ok(VariationResult { value: best.0.powf(1.0 / p), optimal_partition: best.1, p })
}

/// First-level p-variation `|X|_{p-var;[s,t]}` of a sampled path.
pub fn path_p_variation(path: &SamplePath, p: f64, iv: IntervalIdx) -> Result<VariationResult> {
    check_exponent(p)?;
    iv.check(path.len())?;
    let tree = Tree::new(path.len());
    let norm = FirstLevelNorm::new(path.values().to_vec(), path.dim(), &tree);
    Ok(run_to_result(DpRun::new(&norm, &tree, p, iv.lo), iv, p))
}

/// Second-level `p/2`-variation `|X2|_{p/2-var;[s,t]}`.
pub fn second_level_p_variation(rp: &Level2RoughPath, p: f64, iv: IntervalIdx) -> Result<VariationResult> {
    check_exponent(p / 2.0)?;
    iv.check(rp.steps() + 1)?;
    let tree = Tree::new(rp.steps() + 1);
    let norm = SecondLevelNorm::new(rp, None, &tree);
    Ok(run_to_result(DpRun::new(&norm, &tree, p / 2.0, iv.lo), iv, p / 2.0))
}

fn run_to_result<N: engine::BoundedNorm>(mut run: DpRun<'_, N>, iv: IntervalIdx, p: f64) -> VariationResult {
    for _ in iv.lo..iv.hi {
        run.advance();
    }
    VariationResult { value: run.best().powf(1.0 / p), optimal_partition: run.partition(), p }
}

fn check_rough_exponent(p: f64) -> Result<()> {
    if !(2.0..3.0).contains(&p) {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

fn check_pair(x: &Level2RoughPath, y: &Level2RoughPath, iv: IntervalIdx) -> Result<()> {
    same_grid(x.base(), y.base())?;
    iv.check(x.steps() + 1)
}

/// Homogeneous distance `|X - Y|_{p-var}^p + |X2 - Y2|_{p/2-var}^{p/2}` on `iv`.
///
/// The second-level difference is taken interval by interval; it need not
/// satisfy Chen's relation itself.
pub fn rough_distance_homog(x: &Level2RoughPath, y: &Level2RoughPath, p: f64, iv: IntervalIdx) -> Result<f64> {
    check_rough_exponent(p)?;
    check_pair(x, y, iv)?;
    let (a, b) = TwoLevel::new(x, Some(y)).powers(p, iv.lo, iv.hi);
    Ok(a + b)
}

/// Inhomogeneous metric `max(|X - Y|_{p-var}, |X2 - Y2|_{p/2-var})` on `iv`.
pub fn rho_pvar_metric(x: &Level2RoughPath, y: &Level2RoughPath, p: f64, iv: IntervalIdx) -> Result<f64> {
    check_rough_exponent(p)?;
    check_pair(x, y, iv)?;
    let (a, b) = TwoLevel::new(x, Some(y)).powers(p, iv.lo, iv.hi);
    Ok(a.powf(1.0 / p).max(b.powf(2.0 / p)))
}

/// Both inhomogeneous components, `(|X - Y|_{p-var}, |X2 - Y2|_{p/2-var})`.
pub fn rho_pvar_components(x: &Level2RoughPath, y: &Level2RoughPath, p: f64, iv: IntervalIdx) -> Result<(f64, f64)> {
    check_rough_exponent(p)?;
    check_pair(x, y, iv)?;
    let (a, b) = TwoLevel::new(x, Some(y)).powers(p, iv.lo, iv.hi);
    Ok((a.powf(1.0 / p), b.powf(2.0 / p)))
}

/// The control `ω(s,t) = |X|^p_{p-var;[s,t]} + |X2|^{p/2}_{p/2-var;[s,t]}`
/// of a level-2 rough path, or of the difference of two rough paths.
pub struct RoughControl {
    data: TwoLevel,
    p: f64,
    points: usize,
}

impl RoughControl {
    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Homogeneous p-variation control of a single rough path.
pub fn pvar_control(rp: &Level2RoughPath, p: f64) -> Result<RoughControl> {
    check_rough_exponent(p)?;
    Ok(RoughControl { data: TwoLevel::new(rp, None), p, points: rp.steps() + 1 })
}

/// Control `|X - Y|^p_{p-var} + |X2 - Y2|^{p/2}_{p/2-var}` of a pair on a shared grid.
pub fn difference_control(x: &Level2RoughPath, y: &Level2RoughPath, p: f64) -> Result<RoughControl> {
    check_rough_exponent(p)?;
    same_grid(x.base(), y.base())?;
    Ok(RoughControl { data: TwoLevel::new(x, Some(y)), p, points: x.steps() + 1 })
}

impl Control for RoughControl {
    fn points(&self) -> usize {
        self.points
    }

    fn eval(&self, lo: usize, hi: usize) -> f64 {
        let (a, b) = self.data.powers(self.p, lo, hi);
        a + b
    }

    fn scan(&self, lo: usize) -> Box<dyn ControlScan + '_> {
        Box::new(RoughScan {
            first: DpRun::new(&self.data.first, &self.data.tree, self.p, lo),
            second: DpRun::new(&self.data.second, &self.data.tree, self.p / 2.0, lo),
        })
    }
}

struct RoughScan<'a> {
    first: DpRun<'a, FirstLevelNorm>,
    second: DpRun<'a, SecondLevelNorm>,
}

impl ControlScan for RoughScan<'_> {
    fn next_value(&mut self) -> f64 {
        self.first.advance() + self.second.advance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::lift_piecewise_linear;
    use crate::path::Tensor2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(vals: &[f64]) -> SamplePath {
        SamplePath::scalar(SamplePath::uniform_times(vals.len() - 1, 1.0), vals.to_vec()).unwrap()
    }

    fn abs_inc(path: &SamplePath) -> impl Fn(usize, usize) -> f64 + '_ {
        move |i, j| crate::path::euclid(&path.increment_unchecked(i, j))
    }

    #[test]
    fn monotone_path_uses_coarsest_partition() {
        let p = scalar(&[0.0, 0.5, 0.7, 1.5, 2.0]);
        let r = p_variation(abs_inc(&p), 2.0, p.full_interval()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        assert_eq!(r.optimal_partition, vec![0, 4]);
    }

    #[test]
    fn zigzag_includes_peak() {
        let p = scalar(&[0.0, 1.0, 0.0]);
        let r = p_variation(abs_inc(&p), 2.0, p.full_interval()).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(r.optimal_partition, vec![0, 1, 2]);
    }

    #[test]
    fn constant_path_gives_zero_with_two_points() {
        let p = scalar(&[1.0; 6]);
        let r = p_variation(abs_inc(&p), 2.5, p.full_interval()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.optimal_partition, vec![0, 5]);
        let fast = path_p_variation(&p, 2.5, p.full_interval()).unwrap();
        assert_eq!(fast.optimal_partition, vec![0, 5]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = scalar(&[0.0, 1.0]);
        assert!(matches!(p_variation(abs_inc(&p), 0.5, p.full_interval()), Err(Error::InvalidExponent(_))));
        assert!(matches!(
            p_variation(|_, _| -1.0, 2.0, p.full_interval()),
            Err(Error::NegativeIntervalValue { .. })
        ));
    }

    #[test]
    fn engine_matches_plain_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..40 {
            let n = rng.random_range(1..120);
            let d = 1 + trial % 3;
            let vals: Vec<f64> = (0..(n + 1) * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let path = SamplePath::new(SamplePath::uniform_times(n, 1.0), vals, d).unwrap();
            let lo = rng.random_range(0..=n);
            let hi = rng.random_range(lo..=n);
            let iv = IntervalIdx { lo, hi };
            for p in [1.0, 1.5, 2.0, 2.5, 4.0] {
                let slow = p_variation(abs_inc(&path), p, iv).unwrap();
                let fast = path_p_variation(&path, p, iv).unwrap();
                assert!((slow.value - fast.value).abs() <= 1e-12 * slow.value.max(1.0), "{slow:?} {fast:?}");
            }
            let rp = lift_piecewise_linear(&path).unwrap();
            let f2 = |i: usize, j: usize| rp.eval_second(IntervalIdx { lo: i, hi: j }).unwrap().norm();
            for p in [2.0, 2.5, 2.9] {
                let slow = p_variation(f2, p / 2.0, iv).unwrap();
                let fast = second_level_p_variation(&rp, p, iv).unwrap();
                assert!((slow.value - fast.value).abs() <= 1e-10 * slow.value.max(1.0), "{slow:?} {fast:?}");
            }
        }
    }

    #[test]
    fn constant_second_level_offset() {
        // identical bases, second levels differing by c per step over m steps
        let m = 6;
        let path = scalar(&[0.0, 0.4, -0.3, 0.8, 0.1, 0.5, 0.2]);
        let x = lift_piecewise_linear(&path).unwrap();
        let c = 0.3;
        let shifted: Vec<Tensor2> =
            (0..m).map(|k| &x.step_tensor(k) + &Tensor2::from_rows(&[vec![c]]).unwrap()).collect();
        let y = Level2RoughPath::from_parts(path.clone(), &shifted, crate::lift::Flavor::Geometric).unwrap();
        let p = 2.5;
        let (first, second) = rho_pvar_components(&x, &y, p, path.full_interval()).unwrap();
        assert_eq!(first, 0.0);
        // the offsets accumulate, so the single-interval partition is optimal
        let expected = m as f64 * c;
        assert!((second - expected).abs() < 1e-12, "{second} vs {expected}");
        assert!((rho_pvar_metric(&x, &y, p, path.full_interval()).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn distance_to_self_is_zero() {
        let x = lift_piecewise_linear(&scalar(&[0.0, 0.3, -0.2, 0.5])).unwrap();
        let iv = x.base().full_interval();
        assert_eq!(rough_distance_homog(&x, &x, 2.5, iv).unwrap(), 0.0);
        assert_eq!(rho_pvar_metric(&x, &x, 2.5, iv).unwrap(), 0.0);
        let y = lift_piecewise_linear(&scalar(&[0.0, 0.3])).unwrap();
        assert!(matches!(rho_pvar_metric(&x, &y, 2.5, iv), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn control_on_single_segment() {
        let x = lift_piecewise_linear(&scalar(&[0.0, 1.3])).unwrap();
        let w = pvar_control(&x, 2.0).unwrap();
        let inc: f64 = 1.3;
        assert!((w.eval(0, 1) - (inc * inc + 0.5 * inc * inc)).abs() < 1e-14);
        assert_eq!(w.eval(1, 1), 0.0);
        assert!(pvar_control(&x, 1.5).is_err());
    }

    #[test]
    fn scan_matches_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let path = SamplePath::new(SamplePath::uniform_times(29, 1.0), vals, 2).unwrap();
        let x = lift_piecewise_linear(&path).unwrap();
        let w = pvar_control(&x, 2.5).unwrap();
        let mut scan = w.scan(4);
        for u in 5..30 {
            let a = scan.next_value();
            assert!((a - w.eval(4, u)).abs() < 1e-12);
        }
    }
}
