//! Vector fields `V: R^e -> L(R^d, R^e)` and per-regime families.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::RngSeed;

/// A vector field with analytic first derivative.
///
/// `eval` writes the `e × d` matrix `V(y)` row-major: `out[a*d + i] = V_i^a(y)`.
/// `jacobian` writes `∂_b V_i^a(y)` at `out[(a*d + i)*e + b]`.
pub trait VectorField: Send + Sync {
    fn state_dim(&self) -> usize;

    fn noise_dim(&self) -> usize;

    fn eval(&self, y: &[f64], out: &mut [f64]);

    fn jacobian(&self, y: &[f64], out: &mut [f64]);
}

/// `V(y) = C` for a fixed `e × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField {
    e: usize,
    d: usize,
    c: Vec<f64>,
}

impl ConstantField {
    pub fn new(e: usize, d: usize, c: Vec<f64>) -> Result<Self> {
        if c.len() != e * d {
            return Err(Error::DimensionMismatch { expected: e * d, got: c.len() });
        }
        Ok(Self { e, d, c })
    }

    pub fn scalar(c: f64) -> Self {
        Self { e: 1, d: 1, c: vec![c] }
    }
}

impl VectorField for ConstantField {
    fn state_dim(&self) -> usize {
        self.e
    }

    fn noise_dim(&self) -> usize {
        self.d
    }

    fn eval(&self, _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.c);
    }

    fn jacobian(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `V_i(y) = A_i y` for `d` matrices `A_i` of size `e × e`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    e: usize,
    a: Vec<Vec<f64>>,
}

impl LinearField {
    pub fn new(e: usize, a: Vec<Vec<f64>>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidParameter("at least one matrix required".into()));
        }
        if let Some(m) = a.iter().find(|m| m.len() != e * e) {
            return Err(Error::DimensionMismatch { expected: e * e, got: m.len() });
        }
        Ok(Self { e, a })
    }

    /// `V_i(y) = σ y` in one dimension for each of `d` noise components.
    pub fn scalar(sigma: f64, d: usize) -> Self {
        Self { e: 1, a: vec![vec![sigma]; d] }
    }

    /// Generators of rotation and shear on `R^2`; they do not commute.
    pub fn rotation_pair(sigma: f64) -> Self {
        Self { e: 2, a: vec![vec![0.0, -sigma, sigma, 0.0], vec![sigma, 0.0, 0.0, -sigma]] }
    }
}

impl VectorField for LinearField {
    fn state_dim(&self) -> usize {
        self.e
    }

    fn noise_dim(&self) -> usize {
        self.a.len()
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let (e, d) = (self.e, self.a.len());
        for a in 0..e {
            for (i, m) in self.a.iter().enumerate() {
                out[a * d + i] = (0..e).map(|b| m[a * e + b] * y[b]).sum();
            }
        }
    }

    fn jacobian(&self, _y: &[f64], out: &mut [f64]) {
        let (e, d) = (self.e, self.a.len());
        for a in 0..e {
            for (i, m) in self.a.iter().enumerate() {
                out[(a * d + i) * e..(a * d + i + 1) * e].copy_from_slice(&m[a * e..(a + 1) * e]);
            }
        }
    }
}

/// Bounded smooth field `V_i^a(y) = amp · sin(⟨w_{a,i}, y⟩ + φ_{a,i}) + bias_{a,i}`.
///
/// All derivatives are bounded, so its global `Lip^γ` norm is finite for every `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    e: usize,
    d: usize,
    amp: f64,
    w: Vec<f64>,
    phase: Vec<f64>,
    bias: Vec<f64>,
}

impl TrigField {
    pub fn new(e: usize, d: usize, amp: f64, w: Vec<f64>, phase: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if w.len() != e * d * e {
            return Err(Error::DimensionMismatch { expected: e * d * e, got: w.len() });
        }
        if phase.len() != e * d || bias.len() != e * d {
            return Err(Error::DimensionMismatch { expected: e * d, got: phase.len().min(bias.len()) });
        }
        Ok(Self { e, d, amp, w, phase, bias })
    }

    /// A fixed, fully coupled field generated from `variant`.
    pub fn standard(e: usize, d: usize, amp: f64, variant: u64) -> Self {
        let mut rng = RngSeed::new(0x7419_f1e1d, variant).rng();
        let w = (0..e * d * e).map(|_| rng.random_range(-1.0..1.0)).collect();
        let phase = (0..e * d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let bias = (0..e * d).map(|_| rng.random_range(0.5..1.0)).collect();
        Self { e, d, amp, w, phase, bias }
    }

    fn arg(&self, k: usize, y: &[f64]) -> f64 {
        let w = &self.w[k * self.e..(k + 1) * self.e];
        w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + self.phase[k]
    }
}

impl VectorField for TrigField {
    fn state_dim(&self) -> usize {
        self.e
    }

    fn noise_dim(&self) -> usize {
        self.d
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.amp * self.arg(k, y).sin() + self.bias[k];
        }
    }

    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        let e = self.e;
        for k in 0..e * self.d {
            let c = self.amp * self.arg(k, y).cos();
            for b in 0..e {
                out[k * e + b] = c * self.w[k * e + b];
            }
        }
    }
}

/// Drift and diffusion combined into one field for the time-augmented driver
/// `(t, X_t)`: column 0 is the drift, columns `1..=d` the diffusion.
pub struct DriftDiffusion {
    drift: Arc<dyn VectorField>,
    diffusion: Arc<dyn VectorField>,
}

impl DriftDiffusion {
    pub fn new(drift: Arc<dyn VectorField>, diffusion: Arc<dyn VectorField>) -> Result<Self> {
        if drift.noise_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: drift.noise_dim() });
        }
        if drift.state_dim() != diffusion.state_dim() {
            return Err(Error::DimensionMismatch { expected: diffusion.state_dim(), got: drift.state_dim() });
        }
        Ok(Self { drift, diffusion })
    }
}

impl VectorField for DriftDiffusion {
    fn state_dim(&self) -> usize {
        self.diffusion.state_dim()
    }

    fn noise_dim(&self) -> usize {
        self.diffusion.noise_dim() + 1
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let (e, d) = (self.state_dim(), self.diffusion.noise_dim());
        let mut mu = vec![0.0; e];
        let mut sigma = vec![0.0; e * d];
        self.drift.eval(y, &mut mu);
        self.diffusion.eval(y, &mut sigma);
        for a in 0..e {
            out[a * (d + 1)] = mu[a];
            out[a * (d + 1) + 1..(a + 1) * (d + 1)].copy_from_slice(&sigma[a * d..(a + 1) * d]);
        }
    }

    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        let (e, d) = (self.state_dim(), self.diffusion.noise_dim());
        let mut dmu = vec![0.0; e * e];
        let mut dsigma = vec![0.0; e * d * e];
        self.drift.jacobian(y, &mut dmu);
        self.diffusion.jacobian(y, &mut dsigma);
        for a in 0..e {
            let row = a * (d + 1);
            out[row * e..(row + 1) * e].copy_from_slice(&dmu[a * e..(a + 1) * e]);
            for i in 0..d {
                out[(row + 1 + i) * e..(row + 2 + i) * e]
                    .copy_from_slice(&dsigma[(a * d + i) * e..(a * d + i + 1) * e]);
            }
        }
    }
}

/// Named presets for the command line and experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum FieldPreset {
    /// `V_k(y) = c_k` in every noise direction, `e = 1`.
    Constant { values: Vec<f64> },
    /// `V_k(y) = σ_k y` in every noise direction, `e = 1`.
    Linear { sigmas: Vec<f64> },
    /// Non-commuting rotation/shear pair scaled by `σ_k`, `e = d = 2`.
    Rotation { sigmas: Vec<f64> },
    /// Bounded trigonometric fields with amplitude `a_k`, `e = d`.
    Bounded { amplitudes: Vec<f64> },
}

impl FieldPreset {
    /// Parses `name` or `name:v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let values: Vec<f64> = if params.is_empty() {
            Vec::new()
        } else {
            params
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number `{v}`"))))
                .collect::<Result<_>>()?
        };
        let or = |default: &[f64]| if values.is_empty() { default.to_vec() } else { values.clone() };
        match name {
            "constant" => Ok(FieldPreset::Constant { values: or(&[1.0, 2.0]) }),
            "linear" => Ok(FieldPreset::Linear { sigmas: or(&[1.0, 0.5]) }),
            "rotation" => Ok(FieldPreset::Rotation { sigmas: or(&[1.0, 0.5]) }),
            "bounded" => Ok(FieldPreset::Bounded { amplitudes: or(&[0.5, 1.0]) }),
            other => Err(Error::UnknownField(other.to_string())),
        }
    }

    pub fn regimes(&self) -> usize {
        match self {
            FieldPreset::Constant { values } => values.len(),
            FieldPreset::Linear { sigmas } | FieldPreset::Rotation { sigmas } => sigmas.len(),
            FieldPreset::Bounded { amplitudes } => amplitudes.len(),
        }
    }

    /// State dimension for noise dimension `d`.
    pub fn state_dim(&self, d: usize) -> usize {
        match self {
            FieldPreset::Constant { .. } | FieldPreset::Linear { .. } => 1,
            FieldPreset::Rotation { .. } => 2,
            FieldPreset::Bounded { .. } => d,
        }
    }

    /// Builds one field per regime for noise dimension `d`.
    pub fn build(&self, d: usize) -> Result<VectorFieldFamily> {
        let fields: Vec<Arc<dyn VectorField>> = match self {
            FieldPreset::Constant { values } => values
                .iter()
                .map(|&c| Ok(Arc::new(ConstantField::new(1, d, vec![c; d])?) as Arc<dyn VectorField>))
                .collect::<Result<_>>()?,
            FieldPreset::Linear { sigmas } => {
                sigmas.iter().map(|&s| Arc::new(LinearField::scalar(s, d)) as Arc<dyn VectorField>).collect()
            }
            FieldPreset::Rotation { sigmas } => {
                if d != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: d });
                }
                sigmas.iter().map(|&s| Arc::new(LinearField::rotation_pair(s)) as Arc<dyn VectorField>).collect()
            }
            FieldPreset::Bounded { amplitudes } => amplitudes
                .iter()
                .enumerate()
                .map(|(k, &a)| Arc::new(TrigField::standard(d, d, a, k as u64)) as Arc<dyn VectorField>)
                .collect(),
        };
        let e = self.state_dim(d);
        VectorFieldFamily::new(fields, 3.0, vec![-2.0; e], vec![2.0; e])
    }
}

/// One vector field per regime, all with the same dimensions.
#[derive(Clone)]
pub struct VectorFieldFamily {
    fields: Vec<Arc<dyn VectorField>>,
    gamma: f64,
    box_lo: Vec<f64>,
    box_hi: Vec<f64>,
}

impl fmt::Debug for VectorFieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldFamily")
            .field("regimes", &self.fields.len())
            .field("state_dim", &self.state_dim())
            .field("noise_dim", &self.noise_dim())
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl VectorFieldFamily {
    pub fn new(fields: Vec<Arc<dyn VectorField>>, gamma: f64, box_lo: Vec<f64>, box_hi: Vec<f64>) -> Result<Self> {
        let first = fields.first().ok_or_else(|| Error::InvalidParameter("empty field family".into()))?;
        let (e, d) = (first.state_dim(), first.noise_dim());
        for f in &fields {
            if f.state_dim() != e || f.noise_dim() != d {
                return Err(Error::DimensionMismatch { expected: e * d, got: f.state_dim() * f.noise_dim() });
            }
        }
        if box_lo.len() != e || box_hi.len() != e || box_lo.iter().zip(&box_hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("evaluation box must be a non-empty box in R^e".into()));
        }
        Ok(Self { fields, gamma, box_lo, box_hi })
    }

    /// A single regime.
    pub fn single(field: Arc<dyn VectorField>) -> Result<Self> {
        let e = field.state_dim();
        Self::new(vec![field], 3.0, vec![-2.0; e], vec![2.0; e])
    }

    pub fn regimes(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, k: usize) -> &dyn VectorField {
        self.fields[k].as_ref()
    }

    pub fn state_dim(&self) -> usize {
        self.fields[0].state_dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.fields[0].noise_dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Sampled estimate of `sup_k |V_k|_{Lip^γ}` over the box: the largest of
    /// `sup |V|`, `sup |DV|` and the Hölder quotient of `DV` with exponent
    /// `min(γ - 1, 1)`.
    pub fn nu_estimate(&self, samples: usize, seed: u64) -> f64 {
        let (e, d) = (self.state_dim(), self.noise_dim());
        let mut rng = RngSeed::new(seed, 0).rng();
        let holder = (self.gamma - 1.0).clamp(0.0, 1.0);
        let mut v = vec![0.0; e * d];
        let mut j1 = vec![0.0; e * d * e];
        let mut j2 = vec![0.0; e * d * e];
        let mut nu = 0.0f64;
        for f in &self.fields {
            for _ in 0..samples {
                let y: Vec<f64> = self.box_lo.iter().zip(&self.box_hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
                let z: Vec<f64> = self.box_lo.iter().zip(&self.box_hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
                f.eval(&y, &mut v);
                f.jacobian(&y, &mut j1);
                f.jacobian(&z, &mut j2);
                let sup_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let sup_dv = j1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let dist = y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let diff = j1.iter().zip(&j2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let quotient = if dist > 0.0 { diff / dist.powf(holder) } else { 0.0 };
                nu = nu.max(sup_v).max(sup_dv).max(quotient);
            }
        }
        nu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_jacobian(f: &dyn VectorField, y: &[f64]) -> Vec<f64> {
        let (e, d) = (f.state_dim(), f.noise_dim());
        let mut out = vec![0.0; e * d * e];
        let (mut plus, mut minus) = (vec![0.0; e * d], vec![0.0; e * d]);
        for b in 0..e {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[b] += 1e-6;
            ym[b] -= 1e-6;
            f.eval(&yp, &mut plus);
            f.eval(&ym, &mut minus);
            for k in 0..e * d {
                out[k * e + b] = (plus[k] - minus[k]) / 2e-6;
            }
        }
        out
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let fields: Vec<Box<dyn VectorField>> = vec![
            Box::new(LinearField::rotation_pair(0.7)),
            Box::new(TrigField::standard(3, 2, 0.8, 5)),
            Box::new(
                DriftDiffusion::new(
                    Arc::new(TrigField::standard(2, 1, 0.3, 1)),
                    Arc::new(TrigField::standard(2, 2, 0.5, 2)),
                )
                .unwrap(),
            ),
        ];
        for f in &fields {
            let y: Vec<f64> = (0..f.state_dim()).map(|k| 0.3 * k as f64 - 0.2).collect();
            let mut exact = vec![0.0; f.state_dim() * f.noise_dim() * f.state_dim()];
            f.jacobian(&y, &mut exact);
            let approx = numeric_jacobian(f.as_ref(), &y);
            for (a, b) in exact.iter().zip(&approx) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rotation_pair_does_not_commute() {
        let f = LinearField::rotation_pair(1.0);
        let (a, b) = (&f.a[0], &f.a[1]);
        let ab: Vec<f64> = (0..4).map(|k| (0..2).map(|m| a[(k / 2) * 2 + m] * b[m * 2 + k % 2]).sum()).collect();
        let ba: Vec<f64> = (0..4).map(|k| (0..2).map(|m| b[(k / 2) * 2 + m] * a[m * 2 + k % 2]).sum()).collect();
        assert_ne!(ab, ba);
    }

    #[test]
    fn presets() {
        assert_eq!(FieldPreset::parse("linear").unwrap(), FieldPreset::Linear { sigmas: vec![1.0, 0.5] });
        assert_eq!(FieldPreset::parse("constant:1,2,3").unwrap().regimes(), 3);
        assert!(matches!(FieldPreset::parse("nope"), Err(Error::UnknownField(_))));
        assert!(FieldPreset::parse("rotation").unwrap().build(1).is_err());
        let fam = FieldPreset::parse("bounded").unwrap().build(2).unwrap();
        assert_eq!((fam.state_dim(), fam.noise_dim(), fam.regimes()), (2, 2, 2));
    }

    #[test]
    fn nu_of_linear_field() {
        let fam = VectorFieldFamily::single(Arc::new(LinearField::scalar(1.5, 1))).unwrap();
        let nu = fam.nu_estimate(2000, 1);
        // sup |σ y| over [-2, 2] is 3
        assert!(nu <= 3.0 && nu > 2.9);
    }
}
