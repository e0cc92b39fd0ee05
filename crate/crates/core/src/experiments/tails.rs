//! Tail studies of the greedy counts `N_α` for Brownian rough paths and
//! their piecewise-linear approximations.

use serde::{Deserialize, Serialize};

use super::record::{unix_now, ExperimentRecord, SCHEMA_VERSION};
use super::run_indexed;
use crate::error::{Error, Result};
use crate::gaussian::{interpolate_on_grid, sample, GaussianSpec, RngSeed};
use crate::greedy::{fit_tail, n_alpha, survival_counts, TailFit};
use crate::lift::lift_piecewise_linear;
use crate::variation::{difference_control, pvar_control};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub schema_version: u32,
    pub d: usize,
    pub horizon: f64,
    /// Grid steps of the Brownian sample.
    pub steps: usize,
    pub trials: usize,
    pub alpha: f64,
    pub p: f64,
    /// Exponent in the envelope `exp(-c u^{2/q})`.
    pub q: f64,
    pub lambdas: Vec<usize>,
    pub seed: u64,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            d: 1,
            horizon: 1.0,
            steps: 1024,
            trials: 10_000,
            alpha: 1.0,
            p: 2.5,
            q: 1.0,
            lambdas: vec![8, 16, 32],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRaw {
    pub lambdas: Vec<usize>,
    /// `N_α` of the fine lift, per trial.
    pub n_x: Vec<usize>,
    /// `N_α` of each approximation, indexed `[λ][trial]`.
    pub n_xl: Vec<Vec<usize>>,
    /// `N_α` of the difference control, indexed `[λ][trial]`.
    pub n_diff: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Fit(TailFit),
    Degenerate { reason: String },
}

impl FitOutcome {
    fn from(samples: &[usize], q: f64) -> Result<Self> {
        match fit_tail(samples, q) {
            Ok(f) => Ok(FitOutcome::Fit(f)),
            Err(e @ (Error::AllSamplesEqual | Error::DegenerateFit(_))) => {
                Ok(FitOutcome::Degenerate { reason: e.to_string() })
            }
            Err(e) => Err(e),
        }
    }

    pub fn fit(&self) -> Option<&TailFit> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::Degenerate { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub fit_x: FitOutcome,
    pub fits_xl: Vec<FitOutcome>,
    /// Frequency of `N_α(|X - X^λ|^p) > 0` per λ.
    pub remainder_positive: Vec<f64>,
    /// `max_u (P(N_α(X^λ) > u) - P(N_α(X) > u))^+` per λ.
    pub overshoot: Vec<f64>,
    /// Overshoot at the finest λ no larger than at the coarsest, up to `2/√trials`.
    pub dominated: bool,
}

fn survival_at(samples: &[usize], u: usize) -> f64 {
    samples.iter().filter(|&&s| s > u).count() as f64 / samples.len() as f64
}

pub fn run_tail_raw(cfg: &TailConfig, workers: usize) -> Result<TailRaw> {
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found: cfg.schema_version });
    }
    if cfg.trials < 10_000 {
        return Err(Error::InsufficientSamples { needed: 10_000, got: cfg.trials });
    }
    if let Some(&l) = cfg.lambdas.iter().find(|&&l| l == 0 || cfg.steps % l != 0) {
        return Err(Error::InvalidParameter(format!("lambda {l} does not divide {} steps", cfg.steps)));
    }
    let spec = GaussianSpec::brownian(cfg.d, cfg.horizon)?;
    let per_trial = run_indexed(cfg.trials, workers, |t| -> Result<(usize, Vec<usize>, Vec<usize>)> {
        let x = sample(&spec, cfg.steps, RngSeed::new(cfg.seed, t as u64))?;
        let rx = lift_piecewise_linear(&x)?;
        let iv = x.full_interval();
        let nx = n_alpha(&pvar_control(&rx, cfg.p)?, cfg.alpha, iv)?;
        let mut nxl = Vec::with_capacity(cfg.lambdas.len());
        let mut nd = Vec::with_capacity(cfg.lambdas.len());
        for &lambda in &cfg.lambdas {
            let rl = lift_piecewise_linear(&interpolate_on_grid(&x, lambda)?)?;
            nxl.push(n_alpha(&pvar_control(&rl, cfg.p)?, cfg.alpha, iv)?);
            nd.push(n_alpha(&difference_control(&rx, &rl, cfg.p)?, cfg.alpha, iv)?);
        }
        Ok((nx, nxl, nd))
    })?;
    let mut raw = TailRaw {
        lambdas: cfg.lambdas.clone(),
        n_x: Vec::with_capacity(cfg.trials),
        n_xl: vec![Vec::with_capacity(cfg.trials); cfg.lambdas.len()],
        n_diff: vec![Vec::with_capacity(cfg.trials); cfg.lambdas.len()],
    };
    for r in per_trial {
        let (nx, nxl, nd) = r?;
        raw.n_x.push(nx);
        for k in 0..cfg.lambdas.len() {
            raw.n_xl[k].push(nxl[k]);
            raw.n_diff[k].push(nd[k]);
        }
    }
    Ok(raw)
}

pub fn summarize_tails(cfg: &TailConfig, raw: &TailRaw) -> Result<TailReport> {
    let fit_x = FitOutcome::from(&raw.n_x, cfg.q)?;
    let fits_xl = raw.n_xl.iter().map(|s| FitOutcome::from(s, cfg.q)).collect::<Result<Vec<_>>>()?;
    let remainder_positive = raw
        .n_diff
        .iter()
        .map(|s| s.iter().filter(|&&n| n > 0).count() as f64 / s.len() as f64)
        .collect();
    let overshoot: Vec<f64> = raw
        .n_xl
        .iter()
        .map(|s| {
            survival_counts(s)
                .into_iter()
                .map(|(u, _)| (survival_at(s, u) - survival_at(&raw.n_x, u)).max(0.0))
                .fold(0.0, f64::max)
        })
        .collect();
    let noise = 2.0 / (raw.n_x.len() as f64).sqrt();
    let dominated = match (overshoot.first(), overshoot.last()) {
        (Some(a), Some(b)) => *b <= a + noise,
        _ => true,
    };
    Ok(TailReport { fit_x, fits_xl, remainder_positive, overshoot, dominated })
}

pub fn tail_experiment(cfg: &TailConfig, workers: usize) -> Result<(TailReport, ExperimentRecord)> {
    let started = unix_now();
    let raw = run_tail_raw(cfg, workers)?;
    let report = summarize_tails(cfg, &raw)?;
    let record = ExperimentRecord::new("tails", cfg, cfg.seed, started, &raw, &report)?;
    Ok((report, record))
}
