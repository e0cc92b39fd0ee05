//! Sampled paths, second-level tensors and grid intervals.
//!
//! A [`SamplePath`] stores a strictly increasing time grid starting at zero
//! together with one `d`-dimensional value per grid point. Between grid points
//! the path is understood to be linearly interpolated; every continuous-time
//! quantity in the crate is induced by the grid data.

use std::io::{Read, Write};
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A discretely sampled path `X: [0, T] -> R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct SamplePath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawPath> for SamplePath {
    type Error = Error;

    fn try_from(raw: RawPath) -> Result<Self> {
        SamplePath::from_rows(raw.times, &raw.values)
    }
}

impl From<SamplePath> for RawPath {
    fn from(path: SamplePath) -> Self {
        RawPath {
            values: path.rows().map(<[f64]>::to_vec).collect(),
            times: path.times,
        }
    }
}

impl SamplePath {
    /// Builds a path from a time grid and row-major values of shape `(times.len(), dim)`.
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be at least 1".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidPath("empty time grid".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "{} values do not fill {} rows of dimension {dim}",
                values.len(),
                times.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPath(format!("grid starts at {} instead of 0", times[0])));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath(format!(
                "times not strictly increasing at index {}",
                k + 1
            )));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite entry".into()));
        }
        Ok(Self { times, values, dim })
    }

    pub fn from_rows(times: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidPath("ragged value rows".into()));
        }
        if rows.len() != times.len() {
            return Err(Error::InvalidPath(format!(
                "{} rows for {} times",
                rows.len(),
                times.len()
            )));
        }
        Self::new(times, rows.concat(), dim)
    }

    /// Scalar path from values on a grid.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values, 1)
    }

    /// Uniform grid of `n` steps on `[0, horizon]`.
    pub fn uniform_times(n: usize, horizon: f64) -> Vec<f64> {
        (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid points (`n + 1`).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn full_interval(&self) -> IntervalIdx {
        IntervalIdx { lo: 0, hi: self.steps() }
    }

    /// `X_{t_hi} - X_{t_lo}`.
    pub fn increment(&self, iv: IntervalIdx) -> Result<Vec<f64>> {
        iv.check(self.len())?;
        Ok(self.increment_unchecked(iv.lo, iv.hi))
    }

    pub(crate) fn increment_unchecked(&self, lo: usize, hi: usize) -> Vec<f64> {
        self.point(hi).iter().zip(self.point(lo)).map(|(b, a)| b - a).collect()
    }

    /// Value of the linear interpolant at time `t` (clamped to the grid).
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let k = locate(&self.times, t);
        if k + 1 >= self.len() {
            return self.point(self.steps()).to_vec();
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let theta = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.point(k)
            .iter()
            .zip(self.point(k + 1))
            .map(|(a, b)| a + theta * (b - a))
            .collect()
    }

    /// Evaluates the linear interpolant on another grid.
    pub fn resample(&self, times: &[f64]) -> Result<SamplePath> {
        let mut values = Vec::with_capacity(times.len() * self.dim);
        for &t in times {
            values.extend(self.value_at(t));
        }
        SamplePath::new(times.to_vec(), values, self.dim)
    }

    /// Path with every value shifted by `c`.
    pub fn shifted(&self, c: &[f64]) -> Result<SamplePath> {
        if c.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: c.len() });
        }
        let values = self
            .values
            .chunks_exact(self.dim)
            .flat_map(|row| row.iter().zip(c).map(|(v, s)| v + s))
            .collect();
        SamplePath::new(self.times.clone(), values, self.dim)
    }

    /// Writes the path as CSV with header `t,x1,...,xd` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (k, row) in self.rows().enumerate() {
            let mut rec = vec![fmt17(self.times[k])];
            rec.extend(row.iter().map(|&v| fmt17(v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<SamplePath> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(Error::InvalidPath("CSV header must be t,x1,...,xd".into()));
        }
        let dim = headers.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidPath(format!("bad number `{s}`: {e}")))
            };
            times.push(parse(&rec[0])?);
            for field in rec.iter().skip(1) {
                values.push(parse(field)?);
            }
        }
        SamplePath::new(times, values, dim)
    }
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Index `k` with `times[k] <= t < times[k+1]`, clamped to `[0, len-1]`.
pub(crate) fn locate(times: &[f64], t: f64) -> usize {
    match times.binary_search_by(|probe| probe.partial_cmp(&t).expect("finite times")) {
        Ok(k) => k,
        Err(0) => 0,
        Err(k) => k - 1,
    }
}

/// A closed interval `[t_lo, t_hi]` of grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalIdx {
    pub lo: usize,
    pub hi: usize,
}

impl IntervalIdx {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidParameter(format!("interval {lo}:{hi} has lo > hi")));
        }
        Ok(Self { lo, hi })
    }

    /// Checks the interval against a grid with `points` points.
    pub fn check(self, points: usize) -> Result<()> {
        if self.lo > self.hi || self.hi >= points {
            return Err(Error::IndexOutOfRange { lo: self.lo, hi: self.hi, points });
        }
        Ok(())
    }

    pub fn len(self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(self) -> bool {
        self.hi == self.lo
    }
}

/// An element of `R^d ⊗ R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.data[i * dim + i] = 1.0;
        }
        t
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rows.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
            });
        }
        Ok(Self { dim, data: rows.concat() })
    }

    pub(crate) fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Tensor2 {
        let d = self.dim;
        let mut t = Tensor2::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.data[j * d + i] = self.data[i * d + j];
            }
        }
        t
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn sym(&self) -> Tensor2 {
        let t = self.transpose();
        Tensor2::from_flat(self.dim, self.data.iter().zip(&t.data).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    /// Antisymmetric part `(A - A^T) / 2`, the Lévy area for a second level.
    pub fn antisym(&self) -> Tensor2 {
        let t = self.transpose();
        Tensor2::from_flat(self.dim, self.data.iter().zip(&t.data).map(|(a, b)| 0.5 * (a - b)).collect())
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        Tensor2::from_flat(self.dim, self.data.iter().map(|a| a * s).collect())
    }

    /// Euclidean (Frobenius) norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor2) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Add for &Tensor2 {
    type Output = Tensor2;

    fn add(self, rhs: &Tensor2) -> Tensor2 {
        Tensor2::from_flat(self.dim, self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Tensor2 {
    type Output = Tensor2;

    fn sub(self, rhs: &Tensor2) -> Tensor2 {
        Tensor2::from_flat(self.dim, self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect())
    }
}

impl AddAssign<&Tensor2> for Tensor2 {
    fn add_assign(&mut self, rhs: &Tensor2) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// `(a ⊗ b)[i][j] = a[i] * b[j]`.
pub fn outer(a: &[f64], b: &[f64]) -> Result<Tensor2> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let data = a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect();
    Ok(Tensor2::from_flat(a.len(), data))
}

/// `a ⊗ b` accumulated into a row-major buffer.
#[inline]
pub(crate) fn add_outer(acc: &mut [f64], a: &[f64], b: &[f64]) {
    let d = b.len();
    for (i, &x) in a.iter().enumerate() {
        let row = &mut acc[i * d..(i + 1) * d];
        for (r, &y) in row.iter_mut().zip(b) {
            *r += x * y;
        }
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Maximum over grid points of the Euclidean distance `|X_t - Y_t|`.
pub fn sup_distance(x: &SamplePath, y: &SamplePath) -> Result<f64> {
    same_grid(x, y)?;
    Ok(x
        .rows()
        .zip(y.rows())
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

pub(crate) fn same_grid(x: &SamplePath, y: &SamplePath) -> Result<()> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch { expected: x.dim, got: y.dim });
    }
    if x.times != y.times {
        return Err(Error::GridMismatch(format!(
            "grids of {} and {} points differ",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Sorted union of two grids; points closer than `1e-12 * horizon` are merged.
pub fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    let horizon = a.last().copied().unwrap_or(0.0).max(b.last().copied().unwrap_or(0.0));
    let tol = 1e-12 * horizon.max(1.0);
    // near-duplicates resolve to the point of `a`
    let mut all: Vec<(f64, bool)> = a.iter().map(|&t| (t, true)).chain(b.iter().map(|&t| (t, false))).collect();
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite times"));
    let mut out: Vec<(f64, bool)> = Vec::with_capacity(all.len());
    for (t, from_a) in all {
        match out.last_mut() {
            Some(last) if t - last.0 <= tol => {
                if from_a && !last.1 {
                    *last = (t, true);
                }
            }
            _ => out.push((t, from_a)),
        }
    }
    out.into_iter().map(|(t, _)| t).collect()
}
