#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use roughswitch::SamplePath;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random walk with Gaussian-ish steps on a jittered grid of `[0, 1]`.
pub fn random_path(rng: &mut ChaCha8Rng, steps: usize, dim: usize) -> SamplePath {
    let mut times = vec![0.0];
    for _ in 0..steps {
        let last = *times.last().unwrap();
        times.push(last + rng.random_range(0.5..1.5));
    }
    let total = *times.last().unwrap();
    let times: Vec<f64> = times.iter().map(|t| t / total).collect();
    let mut values = vec![0.0; (steps + 1) * dim];
    for k in 1..=steps {
        for c in 0..dim {
            values[k * dim + c] = values[(k - 1) * dim + c] + rng.random_range(-1.0..1.0);
        }
    }
    SamplePath::new(times, values, dim).unwrap()
}

/// Largest `Σ f(s_i, s_{i+1})^p` over all partitions of `lo..=hi`, by recursion
/// over the position of the last interior point.
pub fn brute_force_pvar_power(f: &dyn Fn(usize, usize) -> f64, p: f64, lo: usize, hi: usize) -> f64 {
    fn rec(f: &dyn Fn(usize, usize) -> f64, p: f64, lo: usize, hi: usize) -> f64 {
        // best over partitions of lo..=hi
        let mut best = f(lo, hi).powf(p);
        for mid in lo + 1..hi {
            best = best.max(rec(f, p, lo, mid) + f(mid, hi).powf(p));
        }
        best
    }
    if lo == hi {
        0.0
    } else {
        rec(f, p, lo, hi)
    }
}

/// All partitions of `lo..=hi` as index lists.
pub fn all_partitions(lo: usize, hi: usize) -> Vec<Vec<usize>> {
    if lo == hi {
        return vec![vec![lo]];
    }
    let interior = hi - lo - 1;
    (0u64..1 << interior)
        .map(|mask| {
            let mut v = vec![lo];
            v.extend((0..interior).filter(|b| mask >> b & 1 == 1).map(|b| lo + b + 1));
            v.push(hi);
            v
        })
        .collect()
}

/// 2D ρ-variation over every pair of partitions, `Σ |R rect|^ρ` before the root.
pub fn brute_force_2d(r: &dyn Fn(usize, usize) -> f64, rho: f64, rows: (usize, usize), cols: (usize, usize)) -> f64 {
    let rect = |a: usize, b: usize, c: usize, d: usize| r(b, d) - r(a, d) - r(b, c) + r(a, c);
    let mut best = 0.0f64;
    for rp in all_partitions(rows.0, rows.1) {
        for cp in all_partitions(cols.0, cols.1) {
            let mut s = 0.0;
            for w in rp.windows(2) {
                for v in cp.windows(2) {
                    s += rect(w[0], w[1], v[0], v[1]).abs().powf(rho);
                }
            }
            best = best.max(s);
        }
    }
    best
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
