//! Brownian and fractional Brownian samplers, covariance grids and the
//! linear-interpolation approximations `X^λ`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::linear_fit;
use crate::path::SamplePath;
use crate::variation::CovGrid;

/// Largest grid (in steps) the Cholesky fBm sampler accepts.
pub const FBM_MAX_STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaussianKind {
    Brownian,
    FractionalBrownian { hurst: f64 },
}

/// Law of a centred Gaussian driver with independent components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    #[serde(flatten)]
    pub kind: GaussianKind,
    pub d: usize,
    pub horizon: f64,
    /// 2D variation exponent of the covariance: 1 for BM, `1/(2H)` for fBm.
    pub rho: f64,
}

impl GaussianSpec {
    pub fn brownian(d: usize, horizon: f64) -> Result<Self> {
        Self { kind: GaussianKind::Brownian, d, horizon, rho: 1.0 }.validated()
    }

    pub fn fbm(hurst: f64, d: usize, horizon: f64) -> Result<Self> {
        Self { kind: GaussianKind::FractionalBrownian { hurst }, d, horizon, rho: 1.0 / (2.0 * hurst) }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if let GaussianKind::FractionalBrownian { hurst } = self.kind {
            if !(hurst > 0.25 && hurst <= 0.5) {
                return Err(Error::InvalidParameter(format!("Hurst index {hurst} outside (1/4, 1/2]")));
            }
        }
        Ok(self)
    }

    /// Covariance `E[X^i_s X^i_t]` of one component.
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        match self.kind {
            GaussianKind::Brownian => s.min(t),
            GaussianKind::FractionalBrownian { hurst } => fbm_covariance(hurst, s, t),
        }
    }
}

/// `R^H(s,t) = ½(t^{2H} + s^{2H} - |t-s|^{2H})`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (t.powf(h2) + s.powf(h2) - (t - s).abs().powf(h2))
}

/// Seed of a reproducible random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Same seed, different stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }
}

/// Samples the driver on a uniform grid of `n` steps over `[0, T]`.
pub fn sample(spec: &GaussianSpec, n: usize, seed: RngSeed) -> Result<SamplePath> {
    let spec = spec.validated()?;
    if n == 0 {
        return Err(Error::InvalidParameter("at least one step required".into()));
    }
    sample_with(&spec, n, &mut seed.rng())
}

/// Samples with a caller-supplied generator.
pub fn sample_with(spec: &GaussianSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<SamplePath> {
    let times = SamplePath::uniform_times(n, spec.horizon);
    let d = spec.d;
    let mut values = vec![0.0; (n + 1) * d];
    match spec.kind {
        GaussianKind::Brownian => {
            let sd = (spec.horizon / n as f64).sqrt();
            for c in 0..d {
                let mut acc = 0.0;
                for k in 1..=n {
                    let z: f64 = StandardNormal.sample(rng);
                    acc += sd * z;
                    values[k * d + c] = acc;
                }
            }
        }
        GaussianKind::FractionalBrownian { hurst } => {
            let chol = fbm_cholesky(hurst, spec.horizon, n)?;
            let mut z = vec![0.0; n];
            for c in 0..d {
                z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
                for i in 0..n {
                    let row = &chol[i * n..i * n + i + 1];
                    let x: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                    values[(i + 1) * d + c] = x;
                }
            }
        }
    }
    SamplePath::new(times, values, d)
}

type CholKey = (u64, u64, usize);

fn cholesky_cache() -> &'static Mutex<HashMap<CholKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<CholKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Row-major lower Cholesky factor of the fBm covariance at `t_1, ..., t_n`.
fn fbm_cholesky(hurst: f64, horizon: f64, n: usize) -> Result<Arc<Vec<f64>>> {
    if n > FBM_MAX_STEPS {
        return Err(Error::InvalidParameter(format!("fBm grid of {n} steps exceeds {FBM_MAX_STEPS}")));
    }
    let key = (hurst.to_bits(), horizon.to_bits(), n);
    if let Some(l) = cholesky_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(Arc::clone(l));
    }
    let times = SamplePath::uniform_times(n, horizon);
    let cov = DMatrix::from_fn(n, n, |i, j| fbm_covariance(hurst, times[i + 1], times[j + 1]));
    let chol = cov.cholesky().ok_or_else(|| {
        Error::Cholesky(format!("fBm covariance with H = {hurst}, T = {horizon} on {n} steps is not numerically PD"))
    })?;
    let l = chol.l();
    let flat: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| l[(i, j)]).collect();
    let flat = Arc::new(flat);
    cholesky_cache().lock().expect("cache poisoned").insert(key, Arc::clone(&flat));
    Ok(flat)
}

/// Keeps every `(n/λ)`-th grid point; the linear interpolant is `X^λ`.
pub fn interpolate(path: &SamplePath, lambda: usize) -> Result<SamplePath> {
    let n = path.steps();
    if lambda == 0 || n % lambda != 0 {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} does not divide {n} steps")));
    }
    let stride = n / lambda;
    let d = path.dim();
    let mut times = Vec::with_capacity(lambda + 1);
    let mut values = Vec::with_capacity((lambda + 1) * d);
    for k in (0..=n).step_by(stride) {
        times.push(path.times()[k]);
        values.extend_from_slice(path.point(k));
    }
    SamplePath::new(times, values, d)
}

/// `X^λ` evaluated back on the fine grid of `path`.
pub fn interpolate_on_grid(path: &SamplePath, lambda: usize) -> Result<SamplePath> {
    interpolate(path, lambda)?.resample(path.times())
}

/// Exact covariance of one component on `times`.
pub fn cov_grid(spec: &GaussianSpec, times: &[f64]) -> Result<CovGrid> {
    let n = times.len();
    let r = (0..n * n).map(|k| spec.covariance(times[k / n], times[k % n])).collect();
    CovGrid::new(times.to_vec(), r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub lambdas: Vec<usize>,
    /// `sup_t E|X^λ_t - X_t|²` per λ, estimated on the fine grid.
    pub sup_mse: Vec<f64>,
    /// Slope of `log sup_mse` against `log(T/λ)` over λ with nonzero error.
    pub exponent: f64,
    pub trials: usize,
}

/// Monte Carlo check of the uniform second-moment convergence of `X^λ`.
pub fn check_condition_approx(
    spec: &GaussianSpec,
    n: usize,
    lambdas: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ApproxReport> {
    if trials < 1000 {
        return Err(Error::InsufficientSamples { needed: 1000, got: trials });
    }
    let spec = spec.validated()?;
    let mut sums = vec![vec![0.0; n + 1]; lambdas.len()];
    for trial in 0..trials {
        let x = sample(&spec, n, RngSeed::new(seed, trial as u64))?;
        for (li, &lambda) in lambdas.iter().enumerate() {
            let xl = interpolate_on_grid(&x, lambda)?;
            for (k, acc) in sums[li].iter_mut().enumerate() {
                *acc += x.point(k).iter().zip(xl.point(k)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
        }
    }
    let sup_mse: Vec<f64> =
        sums.iter().map(|s| s.iter().fold(0.0f64, |m, v| m.max(v / trials as f64))).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .zip(&sup_mse)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&l, &m)| ((spec.horizon / l as f64).ln(), m.ln()))
        .unzip();
    let exponent = if xs.len() >= 2 { linear_fit(&xs, &ys).0 } else { 0.0 };
    Ok(ApproxReport { lambdas: lambdas.to_vec(), sup_mse, exponent, trials })
}
