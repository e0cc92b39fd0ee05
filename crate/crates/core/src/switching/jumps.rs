//! Jump processes: generator matrices, CTMC simulation and tail checks.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::RngSeed;
use crate::greedy::survival_counts;

/// Generator matrix `Q` of a finite-state continuous-time Markov chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Generator {
    n: usize,
    q: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Generator {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Generator::new(&rows)
    }
}

impl From<Generator> for Vec<Vec<f64>> {
    fn from(g: Generator) -> Self {
        g.q.chunks(g.n).map(<[f64]>::to_vec).collect()
    }
}

impl Generator {
    /// Rows must sum to zero with non-negative off-diagonal entries.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidGenerator("empty state space".into()));
        }
        let mut q = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGenerator(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGenerator(format!("row {i} has a non-finite entry")));
            }
            if let Some(j) = (0..n).find(|&j| j != i && row[j] < 0.0) {
                return Err(Error::InvalidGenerator(format!("negative rate q[{i}][{j}] = {}", row[j])));
            }
            let sum: f64 = row.iter().sum();
            let scale = row.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            if sum.abs() > 1e-12 * scale {
                return Err(Error::InvalidGenerator(format!("row {i} sums to {sum}")));
            }
            q.extend_from_slice(row);
        }
        Ok(Self { n, q })
    }

    /// Two states flipping at rate `mu` in both directions.
    pub fn two_state(mu: f64) -> Result<Self> {
        Self::new(&[vec![-mu, mu], vec![mu, -mu]])
    }

    /// `n` absorbing states.
    pub fn zero(n: usize) -> Result<Self> {
        Self::new(&vec![vec![0.0; n]; n])
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    /// Total exit rate `-q_ii`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rate(i, i)
    }
}

/// A piecewise-constant regime path on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct JumpTrajectory {
    jump_times: Vec<f64>,
    states: Vec<usize>,
    horizon: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    jump_times: Vec<f64>,
    states: Vec<usize>,
    horizon: f64,
}

impl TryFrom<RawTrajectory> for JumpTrajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        JumpTrajectory::new(raw.jump_times, raw.states, raw.horizon)
    }
}

impl JumpTrajectory {
    /// `states[k]` holds on `[τ_k, τ_{k+1})` with `τ_0 = 0`.
    pub fn new(jump_times: Vec<f64>, states: Vec<usize>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if states.len() != jump_times.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} states for {} jumps",
                states.len(),
                jump_times.len()
            )));
        }
        if let Some(&t) = jump_times.iter().find(|&&t| !(t > 0.0 && t < horizon)) {
            return Err(Error::InvalidParameter(format!("jump time {t} outside (0, {horizon})")));
        }
        if jump_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("jump times not strictly increasing".into()));
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("consecutive states must differ".into()));
        }
        Ok(Self { jump_times, states, horizon })
    }

    /// No jumps: a single regime on the whole horizon.
    pub fn constant(state: usize, horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![state], horizon)
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// Index `k` of the inter-jump interval `[τ_k, τ_{k+1})` containing `t`.
    pub fn segment_at(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&tau| tau <= t)
    }

    /// Regime in force at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.segment_at(t)]
    }
}

/// Exponential-holding-time simulation of the chain started in `initial`.
pub fn simulate_ctmc(q: &Generator, initial: usize, horizon: f64, seed: RngSeed) -> Result<JumpTrajectory> {
    simulate_ctmc_with(q, initial, horizon, &mut seed.rng())
}

pub fn simulate_ctmc_with<R: Rng + ?Sized>(
    q: &Generator,
    initial: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<JumpTrajectory> {
    if initial >= q.states() {
        return Err(Error::InvalidParameter(format!("initial state {initial} of {}", q.states())));
    }
    let mut t = 0.0;
    let mut state = initial;
    let mut jump_times = Vec::new();
    let mut states = vec![initial];
    loop {
        let rate = q.exit_rate(state);
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        t += hold / rate;
        if t >= horizon {
            break;
        }
        let mut u = rng.random::<f64>() * rate;
        let mut next = state;
        for j in (0..q.states()).filter(|&j| j != state) {
            next = j;
            u -= q.rate(state, j);
            if u < 0.0 {
                break;
            }
        }
        jump_times.push(t);
        states.push(next);
        state = next;
    }
    JumpTrajectory::new(jump_times, states, horizon)
}

/// Where the regime path of a trial comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSource {
    /// A single regime, state 0.
    None,
    /// A fresh chain per trial.
    Ctmc { generator: Generator, initial: usize },
    /// The same deterministic schedule in every trial.
    Schedule { jump_times: Vec<f64>, states: Vec<usize> },
}

impl JumpSource {
    pub fn draw(&self, horizon: f64, seed: RngSeed) -> Result<JumpTrajectory> {
        self.draw_with(horizon, &mut seed.rng())
    }

    pub fn draw_with<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<JumpTrajectory> {
        match self {
            JumpSource::None => JumpTrajectory::constant(0, horizon),
            JumpSource::Ctmc { generator, initial } => simulate_ctmc_with(generator, *initial, horizon, rng),
            JumpSource::Schedule { jump_times, states } => {
                JumpTrajectory::new(jump_times.clone(), states.clone(), horizon)
            }
        }
    }

    /// Largest state index the source can visit.
    pub fn max_state(&self) -> usize {
        match self {
            JumpSource::None => 0,
            JumpSource::Ctmc { generator, .. } => generator.states() - 1,
            JumpSource::Schedule { states, .. } => states.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpTailReport {
    /// No envelope violation at thresholds with enough exceedances.
    pub holds: bool,
    pub mean: f64,
    /// Tail-sum estimate `Σ_j P(N > j)` of the mean.
    pub tail_sum_mean: f64,
    /// Largest `j` at which the empirical tail exceeds the envelope.
    pub largest_violation: Option<usize>,
    /// `(j, P(N > j), envelope(j))` at the thresholds that were checked.
    pub checked: Vec<(usize, f64, f64)>,
    pub samples: usize,
}

/// Envelope `exp(-j (log j - γ₀))`.
pub fn jump_tail_envelope(j: usize, gamma0: f64) -> f64 {
    if j == 0 {
        return f64::INFINITY;
    }
    let j = j as f64;
    (-j * (j.ln() - gamma0)).exp()
}

/// Compares the empirical survival of jump counts with the envelope at
/// every threshold with at least `min_exceedances` exceedances.
pub fn check_jump_tail(counts: &[usize], gamma0: f64, min_exceedances: usize) -> Result<JumpTailReport> {
    if counts.len() < 10_000 {
        return Err(Error::InsufficientSamples { needed: 10_000, got: counts.len() });
    }
    let total = counts.len() as f64;
    let survival = survival_counts(counts);
    let tail_sum_mean = survival.iter().map(|&(_, c)| c as f64 / total).sum();
    let mut checked = Vec::new();
    let mut largest_violation = None;
    for &(j, c) in survival.iter().filter(|&&(j, c)| j >= 1 && c >= min_exceedances.max(1)) {
        let emp = c as f64 / total;
        let env = jump_tail_envelope(j, gamma0);
        if emp > env {
            largest_violation = Some(j);
        }
        checked.push((j, emp, env));
    }
    Ok(JumpTailReport {
        holds: largest_violation.is_none(),
        mean: counts.iter().sum::<usize>() as f64 / total,
        tail_sum_mean,
        largest_violation,
        checked,
        samples: counts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_validation() {
        assert!(Generator::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).is_ok());
        assert!(Generator::new(&[vec![-1.0, 0.5], vec![1.0, -1.0]]).is_err());
        assert!(Generator::new(&[vec![1.0, -1.0], vec![1.0, -1.0]]).is_err());
        assert!(Generator::new(&[vec![0.0]]).is_ok());
    }

    #[test]
    fn zero_generator_has_no_jumps() {
        let j = simulate_ctmc(&Generator::zero(3).unwrap(), 2, 5.0, RngSeed::new(1, 1)).unwrap();
        assert_eq!(j.n_jumps(), 0);
        assert_eq!(j.states(), &[2]);
    }

    #[test]
    fn ctmc_trajectory_is_valid() {
        let q = Generator::new(&[vec![-3.0, 1.0, 2.0], vec![0.5, -1.0, 0.5], vec![1.0, 1.0, -2.0]]).unwrap();
        for s in 0..50 {
            let j = simulate_ctmc(&q, 0, 2.0, RngSeed::new(4, s)).unwrap();
            assert_eq!(j.states().len(), j.n_jumps() + 1);
            assert!(j.states().windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn schedule_is_reproduced() {
        let src = JumpSource::Schedule { jump_times: vec![0.25, 0.5], states: vec![0, 1, 0] };
        let j = src.draw(1.0, RngSeed::new(0, 0)).unwrap();
        assert_eq!(j.jump_times(), &[0.25, 0.5]);
        assert_eq!(j.state_at(0.0), 0);
        assert_eq!(j.state_at(0.25), 1);
        assert_eq!(j.state_at(0.49), 1);
        assert_eq!(j.state_at(0.75), 0);
    }

    #[test]
    fn trajectory_validation() {
        assert!(JumpTrajectory::new(vec![0.5], vec![0, 0], 1.0).is_err());
        assert!(JumpTrajectory::new(vec![1.5], vec![0, 1], 1.0).is_err());
        assert!(JumpTrajectory::new(vec![0.5, 0.4], vec![0, 1, 0], 1.0).is_err());
    }

    #[test]
    fn deterministic_counts_respect_envelope() {
        let counts = vec![2usize; 10_000];
        let r = check_jump_tail(&counts, 3.0, 30).unwrap();
        assert!(r.holds);
        assert_eq!(r.mean, 2.0);
        assert!((r.tail_sum_mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_counts() {
        assert!(matches!(check_jump_tail(&[1; 10], 3.0, 30), Err(Error::InsufficientSamples { .. })));
    }
}
