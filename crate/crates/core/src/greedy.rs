//! Greedy partitions of controls and the counting functional `N_α`.
//!
//! Starting from `τ_0 = s`, each greedy time is the first grid point `u`
//! after the previous one with `ω(τ_i, u) ≥ α`, or `t` if no such point
//! exists. `N_α` counts the greedy times strictly before `t`, minus one.
//! On a grid this is a lower bound for the continuum functional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::Level2RoughPath;
use crate::path::{same_grid, IntervalIdx};
use crate::variation::{difference_control, pvar_control};

/// A superadditive interval function on grid indices with `ω(i, i) = 0`.
pub trait Control: Sync {
    /// Number of grid points the control is defined on.
    fn points(&self) -> usize;

    fn eval(&self, lo: usize, hi: usize) -> f64;

    /// Forward scan of `ω(lo, u)` for `u = lo + 1, lo + 2, ...`.
    fn scan(&self, lo: usize) -> Box<dyn ControlScan + '_> {
        Box::new(EvalScan { control: self, lo, pos: lo })
    }
}

/// Stateful forward evaluation of a control from a fixed left endpoint.
pub trait ControlScan {
    /// Advances the right endpoint by one grid point and returns the new value.
    fn next_value(&mut self) -> f64;
}

struct EvalScan<'a, C: Control + ?Sized> {
    control: &'a C,
    lo: usize,
    pos: usize,
}

impl<C: Control + ?Sized> ControlScan for EvalScan<'_, C> {
    fn next_value(&mut self) -> f64 {
        self.pos += 1;
        self.control.eval(self.lo, self.pos)
    }
}

/// A control given by a closure.
pub struct FnControl<F> {
    points: usize,
    f: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> FnControl<F> {
    pub fn new(points: usize, f: F) -> Self {
        Self { points, f }
    }
}

impl<F: Fn(usize, usize) -> f64 + Sync> Control for FnControl<F> {
    fn points(&self) -> usize {
        self.points
    }

    fn eval(&self, lo: usize, hi: usize) -> f64 {
        if lo == hi {
            0.0
        } else {
            (self.f)(lo, hi)
        }
    }
}

/// Pointwise sum of two controls on the same grid.
pub struct SumControl<'a> {
    a: &'a dyn Control,
    b: &'a dyn Control,
}

impl<'a> SumControl<'a> {
    pub fn new(a: &'a dyn Control, b: &'a dyn Control) -> Result<Self> {
        if a.points() != b.points() {
            return Err(Error::GridMismatch(format!("controls on {} and {} points", a.points(), b.points())));
        }
        Ok(Self { a, b })
    }
}

impl Control for SumControl<'_> {
    fn points(&self) -> usize {
        self.a.points()
    }

    fn eval(&self, lo: usize, hi: usize) -> f64 {
        self.a.eval(lo, hi) + self.b.eval(lo, hi)
    }

    fn scan(&self, lo: usize) -> Box<dyn ControlScan + '_> {
        Box::new(SumScan { a: self.a.scan(lo), b: self.b.scan(lo) })
    }
}

struct SumScan<'a> {
    a: Box<dyn ControlScan + 'a>,
    b: Box<dyn ControlScan + 'a>,
}

impl ControlScan for SumScan<'_> {
    fn next_value(&mut self) -> f64 {
        self.a.next_value() + self.b.next_value()
    }
}

/// Greedy sequence over an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    /// Greedy times as grid indices, from `lo` to `hi`, trivial tail removed.
    pub taus: Vec<usize>,
    /// `N_α = sup { n : τ_n < hi }`.
    pub n_alpha: usize,
    pub alpha: f64,
}

pub fn greedy_sequence(w: &dyn Control, alpha: f64, iv: IntervalIdx) -> Result<GreedyResult> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    iv.check(w.points())?;
    let mut taus = vec![iv.lo];
    let mut tau = iv.lo;
    while tau < iv.hi {
        let mut scan = w.scan(tau);
        let mut u = tau;
        loop {
            u += 1;
            if scan.next_value() >= alpha || u == iv.hi {
                break;
            }
        }
        taus.push(u);
        tau = u;
    }
    // every time but the terminal `hi` lies strictly before `hi`
    let n_alpha = taus.len().saturating_sub(2);
    Ok(GreedyResult { taus, n_alpha, alpha })
}

/// Convenience: `N_α` on an interval.
pub fn n_alpha(w: &dyn Control, alpha: f64, iv: IntervalIdx) -> Result<usize> {
    Ok(greedy_sequence(w, alpha, iv)?.n_alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub holds: bool,
    /// `N_total - Σ N_pieces`.
    pub slack: i64,
    pub total: usize,
    pub pieces: Vec<usize>,
}

/// Checks `N_{α,[s,t]} ≥ Σ_k N_{α,[p_k, p_{k+1}]}` for a partition of `[s,t]`.
pub fn check_subadditivity(w: &dyn Control, alpha: f64, partition: &[usize]) -> Result<SubadditivityReport> {
    if partition.len() < 2 || partition.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("partition must be strictly increasing with ≥ 2 points".into()));
    }
    let (lo, hi) = (partition[0], *partition.last().expect("non-empty"));
    let total = n_alpha(w, alpha, IntervalIdx::new(lo, hi)?)?;
    let pieces = partition
        .windows(2)
        .map(|p| n_alpha(w, alpha, IntervalIdx { lo: p[0], hi: p[1] }))
        .collect::<Result<Vec<_>>>()?;
    let slack = total as i64 - pieces.iter().sum::<usize>() as i64;
    Ok(SubadditivityReport { holds: slack >= 0, slack, total, pieces })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailInclusionReport {
    pub holds: bool,
    /// `N_α(|X^λ|^p)`.
    pub lhs: usize,
    /// `N_{α/2^{p-1}}(|X|^p + |X - X^λ|^p)`.
    pub rhs: usize,
}

/// Checks `N_α(|X^λ|^p) ≤ N_{α/2^{p-1}}(|X|^p + |X - X^λ|^p)` on `iv`.
pub fn check_tail_inclusion(
    x: &Level2RoughPath,
    xl: &Level2RoughPath,
    p: f64,
    alpha: f64,
    iv: IntervalIdx,
) -> Result<TailInclusionReport> {
    same_grid(x.base(), xl.base())?;
    let wl = pvar_control(xl, p)?;
    let wx = pvar_control(x, p)?;
    let wd = difference_control(x, xl, p)?;
    let sum = SumControl::new(&wx, &wd)?;
    let lhs = n_alpha(&wl, alpha, iv)?;
    let rhs = n_alpha(&sum, alpha / 2f64.powf(p - 1.0), iv)?;
    Ok(TailInclusionReport { holds: lhs <= rhs, lhs, rhs })
}

/// Least-squares fit of `log P(N > u)` against `-u^{2/q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Thresholds used in the fit.
    pub thresholds: Vec<usize>,
    /// Empirical `log P(N > u)` at those thresholds.
    pub log_survival: Vec<f64>,
    /// Exceedance counts at those thresholds.
    pub exceedances: Vec<usize>,
    /// Slope of `log P(N > u)` against `u^{2/q}` (negative for a decaying tail).
    pub slope: f64,
    pub intercept: f64,
    /// Fitted tail constant `c = -slope`.
    pub c: f64,
    pub q: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Minimum exceedance count for a threshold to enter the tail fit.
pub const MIN_EXCEEDANCES: usize = 30;

/// Empirical survival function `(u, #{N > u})` for `u = 0..=max`.
pub fn survival_counts(samples: &[usize]) -> Vec<(usize, usize)> {
    let max = samples.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for &s in samples {
        hist[s] += 1;
    }
    let mut above = samples.len();
    (0..=max)
        .map(|u| {
            above -= hist[u];
            (u, above)
        })
        .collect()
}

pub fn fit_tail(samples: &[usize], q: f64) -> Result<TailFit> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientSamples { needed: 1000, got: samples.len() });
    }
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    if samples.iter().all(|&s| s == samples[0]) {
        return Err(Error::AllSamplesEqual);
    }
    let total = samples.len() as f64;
    let used: Vec<(usize, usize)> =
        survival_counts(samples).into_iter().filter(|&(_, c)| c >= MIN_EXCEEDANCES).collect();
    if used.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} threshold(s) with at least {MIN_EXCEEDANCES} exceedances",
            used.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|&(u, _)| (u as f64).powf(2.0 / q)).collect();
    let ys: Vec<f64> = used.iter().map(|&(_, c)| (c as f64 / total).ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(TailFit {
        thresholds: used.iter().map(|&(u, _)| u).collect(),
        log_survival: ys,
        exceedances: used.iter().map(|&(_, c)| c).collect(),
        slope,
        intercept,
        c: -slope,
        q,
        r_squared,
        samples: samples.len(),
    })
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}
