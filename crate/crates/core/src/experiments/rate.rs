//! Log-log rate fits and the moment-to-strong-rate transfer check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::linear_fit;

/// Quantiles of an error measure along a λ ladder and the fitted decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub lambdas: Vec<usize>,
    pub median: Vec<f64>,
    pub q90: Vec<f64>,
    /// Fitted decay rate `γ̂`: minus the slope of `log median` against `log λ`.
    pub gamma_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Reference decay rate, when one is known.
    pub target: Option<f64>,
}

/// Linear-interpolated empirical quantile of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Fits `median(λ) ≈ A λ^{-γ}` over the rungs with a positive median.
///
/// `samples[k]` holds the measurements at `lambdas[k]`.
pub fn fit_rate(lambdas: &[usize], samples: &[Vec<f64>], target: Option<f64>) -> Result<RateFit> {
    if lambdas.len() != samples.len() {
        return Err(Error::DimensionMismatch { expected: lambdas.len(), got: samples.len() });
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("lambda ladder must be increasing".into()));
    }
    let median: Vec<f64> = samples.iter().map(|s| quantile(s, 0.5)).collect();
    let q90: Vec<f64> = samples.iter().map(|s| quantile(s, 0.9)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .zip(&median)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&l, &m)| ((l as f64).ln(), m.ln()))
        .unzip();
    let (gamma_hat, intercept, r_squared) = if xs.len() >= 2 {
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        (-slope, intercept, r2)
    } else {
        (0.0, f64::NEG_INFINITY, 0.0)
    };
    Ok(RateFit { lambdas: lambdas.to_vec(), median, q90, gamma_hat, intercept, r_squared, target })
}

/// Per-`q` decay of the empirical `L^q` norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDecay {
    pub q: f64,
    pub norms: Vec<f64>,
    pub eta_hat: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTransferReport {
    pub lambdas: Vec<usize>,
    pub moments: Vec<MomentDecay>,
    /// Smallest fitted `η̂` over the `q` ladder.
    pub eta_hat: f64,
    pub gamma: f64,
    pub r: f64,
    pub k: f64,
    /// Empirical `P(d ≥ k λ^{-γ})` per λ.
    pub exceedance: Vec<f64>,
    /// Reference line `P_0 (λ / λ_0)^{-r}` with `P_0` the first rung's
    /// exceedance, floored at one sample.
    pub reference: Vec<f64>,
    /// `γ < η̂`, the hypothesis of the transfer.
    pub implied: bool,
    /// Exceedances stay below the reference line on every rung.
    pub exceedance_ok: bool,
}

impl RateTransferReport {
    pub fn verdict(&self) -> &'static str {
        match (self.implied, self.exceedance_ok) {
            (true, true) => "implied",
            (true, false) => "implied, exceedances above reference",
            (false, _) => "not implied",
        }
    }
}

/// From distance samples `d(X, X^λ)` per λ: fits `‖d‖_{L^q} ≈ C λ^{-η}` per
/// `q`, and tabulates `P(d ≥ k λ^{-γ})` against a `λ^{-r}` reference line.
pub fn markov_rate_transfer(
    lambdas: &[usize],
    samples: &[Vec<f64>],
    qs: &[f64],
    gamma: f64,
    r: f64,
    k: f64,
) -> Result<RateTransferReport> {
    if lambdas.len() != samples.len() || lambdas.len() < 2 {
        return Err(Error::InvalidParameter("need matching samples for at least two lambdas".into()));
    }
    if qs.is_empty() || qs.iter().any(|&q| !(q > 0.0)) {
        return Err(Error::InvalidParameter("moment orders must be positive".into()));
    }
    let xs: Vec<f64> = lambdas.iter().map(|&l| (l as f64).ln()).collect();
    let mut moments = Vec::with_capacity(qs.len());
    for &q in qs {
        let norms: Vec<f64> = samples
            .iter()
            .map(|s| (s.iter().map(|v| v.abs().powf(q)).sum::<f64>() / s.len() as f64).powf(1.0 / q))
            .collect();
        if norms.iter().all(|&v| v == 0.0) {
            moments.push(MomentDecay { q, norms, eta_hat: f64::INFINITY, r_squared: 1.0 });
            continue;
        }
        if norms.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NonDecaying(format!("L^{q} norm vanishes on some but not all rungs")));
        }
        let ys: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
        let (slope, _, r_squared) = linear_fit(&xs, &ys);
        if slope >= 0.0 {
            return Err(Error::NonDecaying(format!("L^{q} norms grow with slope {slope}")));
        }
        moments.push(MomentDecay { q, norms, eta_hat: -slope, r_squared });
    }
    let eta_hat = moments.iter().map(|m| m.eta_hat).fold(f64::INFINITY, f64::min);
    let exceedance: Vec<f64> = lambdas
        .iter()
        .zip(samples)
        .map(|(&l, s)| {
            let bar = k * (l as f64).powf(-gamma);
            s.iter().filter(|&&v| v >= bar).count() as f64 / s.len() as f64
        })
        .collect();
    let p0 = exceedance[0].max(1.0 / samples[0].len() as f64);
    let reference: Vec<f64> =
        lambdas.iter().map(|&l| p0 * (l as f64 / lambdas[0] as f64).powf(-r)).collect();
    let exceedance_ok = exceedance.iter().zip(&reference).all(|(e, r)| e <= r);
    Ok(RateTransferReport {
        lambdas: lambdas.to_vec(),
        moments,
        eta_hat,
        gamma,
        r,
        k,
        exceedance,
        reference,
        implied: gamma < eta_hat,
        exceedance_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.9), 4.6);
    }

    #[test]
    fn exact_power_law() {
        let lambdas = vec![8, 16, 32, 64];
        let samples: Vec<Vec<f64>> = lambdas.iter().map(|&l| vec![3.0 * (l as f64).powf(-0.5); 5]).collect();
        let fit = fit_rate(&lambdas, &samples, Some(0.5)).unwrap();
        assert!((fit.gamma_hat - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_transfer() {
        let lambdas = vec![8, 16, 32, 64, 128];
        let samples: Vec<Vec<f64>> = lambdas.iter().map(|&l| vec![1.0 / l as f64; 10]).collect();
        let rep = markov_rate_transfer(&lambdas, &samples, &[1.0, 2.0], 0.5, 2.0, 1.0).unwrap();
        assert!((rep.eta_hat - 1.0).abs() < 1e-12);
        assert!(rep.implied);
        assert!(rep.exceedance.iter().all(|&e| e == 0.0));
        let flagged = markov_rate_transfer(&lambdas, &samples, &[2.0], 1.5, 2.0, 1.0).unwrap();
        assert!(!flagged.implied);
        assert_eq!(flagged.verdict(), "not implied");
    }

    #[test]
    fn growing_moments_rejected() {
        let lambdas = vec![8, 16];
        let samples = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            markov_rate_transfer(&lambdas, &samples, &[2.0], 0.1, 2.0, 1.0),
            Err(Error::NonDecaying(_))
        ));
    }
}
