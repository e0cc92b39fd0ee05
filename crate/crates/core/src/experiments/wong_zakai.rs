//! Wong–Zakai convergence experiments for switching RDEs.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rate::{fit_rate, quantile, RateFit};
use super::record::{unix_now, ExperimentRecord, SCHEMA_VERSION};
use super::run_indexed;
use crate::error::{Error, Result};
use crate::gaussian::{interpolate, interpolate_on_grid, sample_with, GaussianKind, GaussianSpec, RngSeed, FBM_MAX_STEPS};
use crate::greedy::n_alpha;
use crate::lift::{lift_piecewise_linear, Level2RoughPath};
use crate::path::{sup_distance, SamplePath};
use crate::switching::{solve_switching_rde, FieldPreset, JumpSource, JumpTrajectory, SwitchingSolution, VectorFieldFamily};
use crate::variation::{pvar_control, rho_pvar_metric};

/// Slack allowed between the solution-error and driver-metric slopes on top of `ε`.
pub const FIT_NOISE_BAND: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub schema_version: u32,
    pub driver: GaussianSpec,
    /// Steps of the fine reference grid.
    pub n_ref: usize,
    /// Steps of the grid on which `ρ_{p-var}` and `N_α` are evaluated.
    pub metric_steps: usize,
    pub lambdas: Vec<usize>,
    pub trials: usize,
    pub p: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub r: f64,
    pub seed: u64,
    pub fields: FieldPreset,
    pub jumps: JumpSource,
    pub y0: Vec<f64>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            driver: GaussianSpec::brownian(1, 1.0).expect("valid spec"),
            n_ref: 32768,
            metric_steps: 4096,
            lambdas: vec![8, 16, 32, 64, 128, 256, 512],
            trials: 500,
            p: 2.5,
            alpha: 1.0,
            epsilon: 0.1,
            r: 2.0,
            seed: 1,
            fields: FieldPreset::Linear { sigmas: vec![1.0, 0.5] },
            jumps: JumpSource::None,
            y0: vec![1.0],
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<VectorFieldFamily> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { expected: SCHEMA_VERSION, found: self.schema_version });
        }
        let spec = self.driver.validated()?;
        if self.lambdas.len() < 4 || self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("lambda ladder must be increasing with at least 4 rungs".into()));
        }
        if self.trials < 100 {
            return Err(Error::InsufficientSamples { needed: 100, got: self.trials });
        }
        if self.n_ref % 2 != 0 || self.metric_steps == 0 || self.n_ref % self.metric_steps != 0 {
            return Err(Error::InvalidParameter("n_ref must be even and a multiple of metric_steps".into()));
        }
        if let Some(&l) = self.lambdas.iter().find(|&&l| l == 0 || self.metric_steps % l != 0) {
            return Err(Error::InvalidParameter(format!("lambda {l} does not divide metric_steps")));
        }
        if matches!(spec.kind, GaussianKind::FractionalBrownian { .. }) && self.n_ref > FBM_MAX_STEPS {
            return Err(Error::InvalidParameter(format!("fBm reference grid capped at {FBM_MAX_STEPS} steps")));
        }
        if !(2.0..3.0).contains(&self.p) || !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter("need 2 <= p < 3 and alpha > 0".into()));
        }
        let family = self.fields.build(spec.d)?;
        if self.jumps.max_state() >= family.regimes() {
            return Err(Error::InvalidParameter(format!(
                "jump source visits state {} but only {} fields are given",
                self.jumps.max_state(),
                family.regimes()
            )));
        }
        if self.y0.len() != family.state_dim() {
            return Err(Error::DimensionMismatch { expected: family.state_dim(), got: self.y0.len() });
        }
        Ok(family)
    }
}

/// Measurements of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub n_jumps: usize,
    pub n_alpha_x: usize,
    /// `|Y_{n_ref} - Y_{n_ref/2}|_∞` at the coarse grid points.
    pub reference_bias: f64,
    pub rho_metric: Vec<f64>,
    pub sup_error: Vec<f64>,
    pub n_alpha_xl: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WongZakaiRaw {
    pub lambdas: Vec<usize>,
    pub trials: Vec<TrialRecord>,
    pub excluded: Vec<TrialFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub solution: RateFit,
    pub driver: RateFit,
    pub reference_bias_median: f64,
    /// Median reference bias over the median error at the finest λ.
    pub reference_bias_ratio: f64,
    pub excluded: usize,
    pub used: usize,
    pub mean_jumps: f64,
    /// `γ̂_solution ≥ γ̂_driver - ε - band`.
    pub slope_check: bool,
    /// Empirical `P(|Y - Y^λ|_∞ ≥ median_0 (λ/λ_0)^{-γ̂} λ^ε)` per λ.
    pub exceedance: Vec<f64>,
}

fn solve(family: &VectorFieldFamily, path: &SamplePath, jumps: &JumpTrajectory, y0: &[f64]) -> Result<SwitchingSolution> {
    solve_switching_rde(family, &lift_piecewise_linear(path)?, jumps, y0)
}

fn lift(path: &SamplePath) -> Result<Level2RoughPath> {
    lift_piecewise_linear(path)
}

fn run_trial(cfg: &ConvergenceConfig, family: &VectorFieldFamily, trial: usize) -> Result<TrialRecord> {
    let mut rng: ChaCha8Rng = RngSeed::new(cfg.seed, trial as u64).rng();
    let x = sample_with(&cfg.driver, cfg.n_ref, &mut rng)?;
    let jumps = cfg.jumps.draw_with(cfg.driver.horizon, &mut rng)?;
    let y = solve(family, &x, &jumps, &cfg.y0)?;

    let half = interpolate(&x, cfg.n_ref / 2)?;
    let y_half = solve(family, &half, &jumps, &cfg.y0)?;
    let reference_bias = y_half
        .path
        .times()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let a = y.path.value_at(t);
            a.iter().zip(y_half.path.point(k)).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
        })
        .fold(0.0f64, f64::max);

    let xm = interpolate(&x, cfg.metric_steps)?;
    let xm_lift = lift(&xm)?;
    let iv = xm.full_interval();
    let n_alpha_x = n_alpha(&pvar_control(&xm_lift, cfg.p)?, cfg.alpha, iv)?;

    let mut rec = TrialRecord {
        trial,
        n_jumps: jumps.n_jumps(),
        n_alpha_x,
        reference_bias,
        rho_metric: Vec::with_capacity(cfg.lambdas.len()),
        sup_error: Vec::with_capacity(cfg.lambdas.len()),
        n_alpha_xl: Vec::with_capacity(cfg.lambdas.len()),
    };
    for &lambda in &cfg.lambdas {
        let xl = interpolate_on_grid(&x, lambda)?;
        let yl = solve(family, &xl, &jumps, &cfg.y0)?;
        rec.sup_error.push(sup_distance(&y.path, &yl.path)?);
        let xlm = lift(&interpolate_on_grid(&xm, lambda)?)?;
        rec.rho_metric.push(rho_pvar_metric(&xm_lift, &xlm, cfg.p, iv)?);
        rec.n_alpha_xl.push(n_alpha(&pvar_control(&xlm, cfg.p)?, cfg.alpha, iv)?);
    }
    Ok(rec)
}

/// Runs every trial. Results are collected in trial order for any worker count.
pub fn run_wong_zakai_raw(cfg: &ConvergenceConfig, workers: usize) -> Result<WongZakaiRaw> {
    let family = cfg.validate()?;
    let results = run_indexed(cfg.trials, workers, |t| run_trial(cfg, &family, t))?;
    let mut trials = Vec::new();
    let mut excluded = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => trials.push(rec),
            Err(e @ Error::BlowUp { .. }) => excluded.push(TrialFailure { trial: t, error: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    Ok(WongZakaiRaw { lambdas: cfg.lambdas.clone(), trials, excluded })
}

/// Aggregates raw measurements into rate fits and checks.
pub fn summarize(cfg: &ConvergenceConfig, raw: &WongZakaiRaw) -> Result<ConvergenceReport> {
    if raw.trials.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let column = |f: &dyn Fn(&TrialRecord) -> &Vec<f64>| -> Vec<Vec<f64>> {
        (0..raw.lambdas.len()).map(|k| raw.trials.iter().map(|t| f(t)[k]).collect()).collect()
    };
    let errors = column(&|t| &t.sup_error);
    let metrics = column(&|t| &t.rho_metric);
    let hurst = match cfg.driver.kind {
        GaussianKind::Brownian => 0.5,
        GaussianKind::FractionalBrownian { hurst } => hurst,
    };
    let solution = fit_rate(&raw.lambdas, &errors, Some(hurst))?;
    let driver = fit_rate(&raw.lambdas, &metrics, None)?;
    let biases: Vec<f64> = raw.trials.iter().map(|t| t.reference_bias).collect();
    let reference_bias_median = quantile(&biases, 0.5);
    let finest = *solution.median.last().expect("non-empty ladder");
    let reference_bias_ratio = if finest > 0.0 { reference_bias_median / finest } else { 0.0 };
    let l0 = raw.lambdas[0] as f64;
    let m0 = solution.median[0];
    let exceedance = raw
        .lambdas
        .iter()
        .zip(&errors)
        .map(|(&l, e)| {
            let l = l as f64;
            let bar = m0 * (l / l0).powf(-solution.gamma_hat) * l.powf(cfg.epsilon);
            e.iter().filter(|&&v| v >= bar).count() as f64 / e.len() as f64
        })
        .collect();
    Ok(ConvergenceReport {
        slope_check: solution.gamma_hat >= driver.gamma_hat - cfg.epsilon - FIT_NOISE_BAND,
        solution,
        driver,
        reference_bias_median,
        reference_bias_ratio,
        excluded: raw.excluded.len(),
        used: raw.trials.len(),
        mean_jumps: raw.trials.iter().map(|t| t.n_jumps as f64).sum::<f64>() / raw.trials.len() as f64,
        exceedance,
    })
}

/// Full run: raw measurements, summary and a persistable record.
pub fn run_wong_zakai(cfg: &ConvergenceConfig, workers: usize) -> Result<(ConvergenceReport, ExperimentRecord)> {
    let started = unix_now();
    let raw = run_wong_zakai_raw(cfg, workers)?;
    let report = summarize(cfg, &raw)?;
    let record = ExperimentRecord::new("wong_zakai", cfg, cfg.seed, started, &raw, &report)?;
    Ok((report, record))
}

/// Writes the per-(trial, λ) CSV: `trial,lambda,rho_metric,sup_error,n_alpha_X,n_alpha_Xl,n_jumps`.
pub fn write_errors_csv<W: std::io::Write>(raw: &WongZakaiRaw, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "lambda", "rho_metric", "sup_error", "n_alpha_X", "n_alpha_Xl", "n_jumps"])?;
    for t in &raw.trials {
        for (k, &lambda) in raw.lambdas.iter().enumerate() {
            w.write_record([
                t.trial.to_string(),
                lambda.to_string(),
                format!("{:.16e}", t.rho_metric[k]),
                format!("{:.16e}", t.sup_error[k]),
                t.n_alpha_x.to_string(),
                t.n_alpha_xl[k].to_string(),
                t.n_jumps.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row of the errors CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub trial: usize,
    pub lambda: usize,
    pub rho_metric: f64,
    pub sup_error: f64,
    #[serde(rename = "n_alpha_X")]
    pub n_alpha_x: usize,
    #[serde(rename = "n_alpha_Xl")]
    pub n_alpha_xl: usize,
    pub n_jumps: usize,
}

pub fn read_errors_csv<R: std::io::Read>(reader: R) -> Result<Vec<ErrorRow>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<Vec<ErrorRow>, _>>()?)
}
