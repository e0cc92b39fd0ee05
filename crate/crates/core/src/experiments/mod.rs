//! Monte Carlo harness: Wong–Zakai rates, rate transfer, tail studies and
//! persisted records.

mod rate;
mod record;
mod tails;
mod wong_zakai;

use rayon::prelude::*;

pub use rate::{fit_rate, markov_rate_transfer, quantile, MomentDecay, RateFit, RateTransferReport};
pub use record::{canonical_hash, code_version, unix_now, ExperimentRecord, SCHEMA_VERSION};
pub use tails::{run_tail_raw, summarize_tails, tail_experiment, FitOutcome, TailConfig, TailRaw, TailReport};
pub use wong_zakai::{
    read_errors_csv, run_wong_zakai, run_wong_zakai_raw, summarize, write_errors_csv, ConvergenceConfig,
    ConvergenceReport, ErrorRow, TrialFailure, TrialRecord, WongZakaiRaw, FIT_NOISE_BAND,
};

use crate::error::{Error, Result};
use crate::gaussian::RngSeed;
use crate::switching::{simulate_ctmc, Generator};

/// Evaluates `f(0), ..., f(n-1)` on `workers` threads (0 means all cores) and
/// returns the results in index order.
pub fn run_indexed<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}

/// Jump counts `N^J` of `trials` independent chains on `[0, T]`.
pub fn jump_count_samples(
    q: &Generator,
    initial: usize,
    horizon: f64,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<usize>> {
    run_indexed(trials, workers, |t| {
        simulate_ctmc(q, initial, horizon, RngSeed::new(seed, t as u64)).map(|j| j.n_jumps())
    })?
    .into_iter()
    .collect()
}
