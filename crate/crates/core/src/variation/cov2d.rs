//! Two-dimensional ρ-variation of covariance grids.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::IntervalIdx;

/// Covariance `R[i][j] = E[X_{t_i} X_{t_j}]` of one scalar component on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovGrid {
    times: Vec<f64>,
    r: Vec<f64>,
}

impl CovGrid {
    /// Validates symmetry and positive semidefiniteness (eigenvalues ≥ -1e-10).
    pub fn new(times: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if r.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: r.len() });
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (r[i * n + j], r[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidParameter(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        let eig = DMatrix::from_row_slice(n, n, &r).symmetric_eigenvalues();
        if let Some(min) = eig.iter().copied().reduce(f64::min) {
            if min < -1e-10 {
                return Err(Error::InvalidParameter(format!("covariance not PSD: eigenvalue {min}")));
            }
        }
        Ok(Self { times, r })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> usize {
        self.times.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.times.len() + j]
    }
}

/// Rectangular increment `E[X_{s,t} X_{s',t'}]` for grid indices `(s,t) × (s',t')`.
pub fn rect_increment(r: &CovGrid, rows: (usize, usize), cols: (usize, usize)) -> f64 {
    r.get(rows.1, cols.1) - r.get(rows.0, cols.1) - r.get(rows.1, cols.0) + r.get(rows.0, cols.0)
}

/// How [`cov_2d_variation`] searches partition pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cov2dMode {
    /// Exact when both sides have at most `limit` points, otherwise descent.
    Auto { limit: usize },
    /// Exact; errors when a side exceeds `limit` points.
    Exact { limit: usize },
    /// Alternating row/column optimisation; a lower bound.
    Descent,
}

impl Default for Cov2dMode {
    fn default() -> Self {
        Cov2dMode::Auto { limit: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cov2dResult {
    pub value: f64,
    /// `false` when the value is only a coordinate-descent lower bound.
    pub exact: bool,
    pub row_partition: Vec<usize>,
    pub col_partition: Vec<usize>,
}

/// 2D ρ-variation of `R` over the rectangle `rows × cols`.
///
/// Exact mode enumerates every column partition and solves for the best row
/// partition by dynamic programming, which yields the same supremum as
/// enumerating all partition pairs.
pub fn cov_2d_variation(
    r: &CovGrid,
    rho: f64,
    rows: IntervalIdx,
    cols: IntervalIdx,
    mode: Cov2dMode,
) -> Result<Cov2dResult> {
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::InvalidExponent(rho));
    }
    rows.check(r.points())?;
    cols.check(r.points())?;
    if rows.is_empty() || cols.is_empty() {
        return Ok(Cov2dResult {
            value: 0.0,
            exact: true,
            row_partition: vec![rows.lo, rows.hi],
            col_partition: vec![cols.lo, cols.hi],
        });
    }
    let (nr, nc) = (rows.len() + 1, cols.len() + 1);
    let exact = match mode {
        Cov2dMode::Exact { limit } => {
            if nr > limit || nc > limit {
                return Err(Error::RectangleTooLarge { rows: nr, cols: nc, limit });
            }
            true
        }
        Cov2dMode::Auto { limit } => nr <= limit && nc <= limit,
        Cov2dMode::Descent => false,
    };
    let (sum, rp, cp) = if exact { exact_search(r, rho, rows, cols) } else { descent(r, rho, rows, cols) };
    Ok(Cov2dResult { value: sum.powf(1.0 / rho), exact, row_partition: rp, col_partition: cp })
}

/// Best partition of `side` for the additive interval score `g`, ties to fewer points.
fn best_partition(side: IntervalIdx, g: impl Fn(usize, usize) -> f64) -> (f64, Vec<usize>) {
    let m = side.len();
    let mut best = vec![0.0f64; m + 1];
    let mut count = vec![0usize; m + 1];
    let mut back = vec![0usize; m + 1];
    for j in 1..=m {
        let mut cand = (f64::NEG_INFINITY, usize::MAX, 0);
        for i in (0..j).rev() {
            let v = best[i] + g(side.lo + i, side.lo + j);
            let c = count[i] + 1;
            if v > cand.0 || (v == cand.0 && c < cand.1) {
                cand = (v, c, i);
            }
        }
        (best[j], count[j], back[j]) = cand;
    }
    let mut part = vec![m];
    let mut k = m;
    while k > 0 {
        k = back[k];
        part.push(k);
    }
    part.reverse();
    (best[m], part.into_iter().map(|k| k + side.lo).collect())
}

fn score_rows(r: &CovGrid, rho: f64, rows: IntervalIdx, cols: &[usize]) -> (f64, Vec<usize>) {
    best_partition(rows, |a, b| {
        cols.windows(2).map(|w| rect_increment(r, (a, b), (w[0], w[1])).abs().powf(rho)).sum()
    })
}

fn score_cols(r: &CovGrid, rho: f64, rows: &[usize], cols: IntervalIdx) -> (f64, Vec<usize>) {
    best_partition(cols, |a, b| {
        rows.windows(2).map(|w| rect_increment(r, (w[0], w[1]), (a, b)).abs().powf(rho)).sum()
    })
}

fn exact_search(r: &CovGrid, rho: f64, rows: IntervalIdx, cols: IntervalIdx) -> (f64, Vec<usize>, Vec<usize>) {
    let interior = cols.len() - 1;
    let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
    for mask in 0u64..(1u64 << interior) {
        let mut cp = vec![cols.lo];
        cp.extend((0..interior).filter(|b| mask >> b & 1 == 1).map(|b| cols.lo + b + 1));
        cp.push(cols.hi);
        let (v, rp) = score_rows(r, rho, rows, &cp);
        if v > best.0 {
            best = (v, rp, cp);
        }
    }
    best
}

fn descent(r: &CovGrid, rho: f64, rows: IntervalIdx, cols: IntervalIdx) -> (f64, Vec<usize>, Vec<usize>) {
    let mut cp: Vec<usize> = (cols.lo..=cols.hi).collect();
    let (mut value, mut rp) = score_rows(r, rho, rows, &cp);
    for _ in 0..100 {
        let (vc, new_cp) = score_cols(r, rho, &rp, cols);
        let (vr, new_rp) = score_rows(r, rho, rows, &new_cp);
        let improved = vr.max(vc) > value * (1.0 + 1e-14);
        cp = new_cp;
        rp = new_rp;
        value = value.max(vr);
        if !improved {
            break;
        }
    }
    (value, rp, cp)
}
