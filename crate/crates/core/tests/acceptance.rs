//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass a substring to run matching criteria only.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use roughswitch::experiments::{
    jump_count_samples, run_wong_zakai, run_wong_zakai_raw, tail_experiment, ConvergenceConfig, TailConfig,
};
use roughswitch::gaussian::{cov_grid, fbm_covariance, interpolate, interpolate_on_grid, sample, GaussianSpec, RngSeed};
use roughswitch::greedy::{check_subadditivity, check_tail_inclusion, n_alpha, Control, FnControl, SumControl};
use roughswitch::lift::ControlledPath;
use roughswitch::switching::{
    check_jump_tail, solve_rde, solve_switching_rde, switching_rough_integral, ConstantField, FieldPreset, Generator,
    JumpSource, JumpTrajectory, LinearField, VectorFieldFamily,
};
use roughswitch::variation::{cov_2d_variation, p_variation, pvar_control, Cov2dMode, CovGrid};
use roughswitch::{lift_piecewise_linear, IntervalIdx, SamplePath};

use common::{brute_force_2d, brute_force_pvar_power, random_path, rng};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn chen() -> Outcome {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut triples = 0usize;
    for _ in 0..100 {
        let d = r.random_range(1..=3);
        let n = r.random_range(1..=199);
        let rp = lift_piecewise_linear(&random_path(&mut r, n, d)).map_err(|e| e.to_string())?;
        let rep = rp.check_chen(1e-10);
        if !rep.passed {
            return Err(format!("violation {:e} at {:?}", rep.chen_violation, rep.worst_triple));
        }
        worst = worst.max(rep.chen_violation);
        triples += rep.triples_checked;
    }
    Ok(format!("100 lifts, {triples} triples, worst violation {worst:.2e}"))
}

fn pvar_oracle() -> Outcome {
    let mut r = rng(202);
    let ps = [1.5, 2.0, 2.5, 3.0];
    let mut worst = 0.0f64;
    for k in 0..500 {
        let points = r.random_range(2..=12);
        let p = ps[k % 4];
        let table: Vec<f64> = if k % 2 == 0 {
            let dim = r.random_range(1..=3);
            let path = random_path(&mut r, points - 1, dim);
            (0..points * points)
                .map(|ij| {
                    let (i, j) = (ij / points, ij % points);
                    if i < j {
                        common::norm(&path.increment(IntervalIdx { lo: i, hi: j }).unwrap())
                    } else {
                        0.0
                    }
                })
                .collect()
        } else {
            (0..points * points).map(|_| r.random_range(0.0..2.0)).collect()
        };
        let f = |i: usize, j: usize| table[i * points + j];
        let iv = IntervalIdx { lo: 0, hi: points - 1 };
        let dp = p_variation(f, p, iv).map_err(|e| e.to_string())?.power();
        let brute = brute_force_pvar_power(&f, p, 0, points - 1);
        let rel = (dp - brute).abs() / brute.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-12 {
            return Err(format!("instance {k}: dp {dp} vs brute force {brute}"));
        }
    }
    Ok(format!("500 instances, worst relative gap {worst:.2e}"))
}

/// A random superadditive control on `points` grid points.
fn random_control(r: &mut rand_chacha::ChaCha8Rng, points: usize) -> Box<dyn Control> {
    if r.random_bool(0.5) {
        let dim = r.random_range(1..=2);
        let path = random_path(r, points - 1, dim);
        let rp = lift_piecewise_linear(&path).unwrap();
        Box::new(pvar_control(&rp, r.random_range(2.0..3.0)).unwrap())
    } else {
        let mut cum = vec![0.0f64];
        for _ in 1..points {
            let last = *cum.last().unwrap();
            cum.push(last + r.random_range(0.0..1.0));
        }
        let theta = r.random_range(1.0..3.0);
        Box::new(FnControl::new(points, move |i: usize, j: usize| (cum[j] - cum[i]).powf(theta)))
    }
}

fn greedy_algebra() -> Outcome {
    let mut r = rng(303);
    for k in 0..1000 {
        let points = r.random_range(3..=60);
        let w = random_control(&mut r, points);
        let alpha = w.eval(0, points - 1) * r.random_range(0.01..0.6) + 1e-9;
        let mut partition: Vec<usize> = (1..points - 1).filter(|_| r.random_bool(0.3)).collect();
        partition.insert(0, 0);
        partition.push(points - 1);
        let rep = check_subadditivity(w.as_ref(), alpha, &partition).map_err(|e| e.to_string())?;
        if !rep.holds {
            return Err(format!("subadditivity instance {k}: {rep:?}"));
        }
    }
    for k in 0..1000 {
        let points = r.random_range(3..=60);
        let (w1, w2) = (random_control(&mut r, points), random_control(&mut r, points));
        let sum = SumControl::new(w1.as_ref(), w2.as_ref()).map_err(|e| e.to_string())?;
        let iv = IntervalIdx { lo: 0, hi: points - 1 };
        let alpha = sum.eval(0, points - 1) * r.random_range(0.01..0.6) + 1e-9;
        let n = |c: &dyn Control| n_alpha(c, alpha, iv).unwrap();
        let (ns, n1, n2) = (n(&sum), n(w1.as_ref()), n(w2.as_ref()));
        if ns > 2 * n1 + 2 * n2 + 2 {
            return Err(format!("doubling instance {k}: {ns} > 2*{n1} + 2*{n2} + 2"));
        }
    }
    let spec = GaussianSpec::brownian(1, 1.0).unwrap();
    let lambdas = [8, 16, 32];
    let mut max_lhs = 0;
    for k in 0..200 {
        let x = sample(&spec, 256, RngSeed::new(303, k as u64)).map_err(|e| e.to_string())?;
        let xl = interpolate_on_grid(&x, lambdas[k % 3]).map_err(|e| e.to_string())?;
        let (rx, rl) = (lift_piecewise_linear(&x).unwrap(), lift_piecewise_linear(&xl).unwrap());
        let alpha = [0.25, 0.5, 1.0][(k / 3) % 3];
        let rep = check_tail_inclusion(&rx, &rl, 2.5, alpha, x.full_interval()).map_err(|e| e.to_string())?;
        if !rep.holds {
            return Err(format!("tail inclusion pair {k}: {rep:?}"));
        }
        max_lhs = max_lhs.max(rep.lhs);
    }
    Ok(format!("1000 subadditivity, 1000 doubling, 200 tail-inclusion instances; max N_α(X^λ) = {max_lhs}"))
}

fn geometric_errors(b: &SamplePath, sigmas: &[f64], jumps: &JumpTrajectory) -> Vec<f64> {
    let family = FieldPreset::Linear { sigmas: sigmas.to_vec() }.build(1).unwrap();
    (6..=12)
        .map(|k| {
            let coarse = interpolate(b, 1 << k).unwrap();
            let rp = lift_piecewise_linear(&coarse).unwrap();
            let sol = solve_switching_rde(&family, &rp, jumps, &[1.0]).unwrap();
            let tau = jumps.jump_times().first().copied().unwrap_or(f64::INFINITY);
            let b_tau = coarse.value_at(tau.min(1.0))[0];
            sol.path
                .times()
                .iter()
                .zip(sol.path.values())
                .map(|(&t, &y)| {
                    let bt = coarse.value_at(t)[0];
                    let exact = if t <= tau {
                        (sigmas[0] * bt).exp()
                    } else {
                        (sigmas[0] * b_tau + sigmas[1] * (bt - b_tau)).exp()
                    };
                    (y - exact).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn monotone(errs: &[f64]) -> bool {
    errs.windows(2).all(|w| w[1] < w[0])
}

fn solver_oracles() -> Outcome {
    // (a)
    let times = SamplePath::uniform_times(1000, 1.0);
    let x = SamplePath::scalar(times.clone(), times).unwrap();
    let rp = lift_piecewise_linear(&x).unwrap();
    let y = solve_rde(&LinearField::scalar(1.0, 1), &rp, &[1.0], x.full_interval()).unwrap();
    let err_a = (y.values().last().unwrap() - std::f64::consts::E).abs();
    // (b)
    let spec = GaussianSpec::brownian(1, 1.0).unwrap();
    let none = JumpTrajectory::constant(0, 1.0).unwrap();
    let switch = JumpTrajectory::new(vec![0.5], vec![0, 1], 1.0).unwrap();
    let (mut bad_b, mut bad_c) = (Vec::new(), Vec::new());
    let (mut mean_b, mut mean_c) = (vec![0.0; 7], vec![0.0; 7]);
    for seed in 0..20u64 {
        let b = sample(&spec, 1 << 12, RngSeed::new(404, seed)).unwrap();
        let e = geometric_errors(&b, &[1.0, 1.0], &none);
        let e2 = geometric_errors(&b, &[1.0, 0.5], &switch);
        if !monotone(&e) {
            bad_b.push(seed);
        }
        if !monotone(&e2) {
            bad_c.push(seed);
        }
        for k in 0..7 {
            mean_b[k] += e[k] / 20.0;
            mean_c[k] += e2[k] / 20.0;
        }
    }
    // (c) deterministic part
    let fam = VectorFieldFamily::new(
        vec![Arc::new(ConstantField::scalar(1.0)), Arc::new(ConstantField::scalar(2.0))],
        3.0,
        vec![-10.0],
        vec![10.0],
    )
    .unwrap();
    let mut worst_c = 0.0f64;
    for n in [64usize, 128, 1000] {
        let times = SamplePath::uniform_times(n, 1.0);
        let x = SamplePath::scalar(times.clone(), times).unwrap();
        let rp = lift_piecewise_linear(&x).unwrap();
        let sol = solve_switching_rde(&fam, &rp, &switch, &[1.0]).unwrap();
        worst_c = worst_c.max((sol.path.values().last().unwrap() - 2.5).abs());
    }
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" ");
    verdict(
        err_a < 1e-6 && bad_b.is_empty() && bad_c.is_empty() && worst_c < 1e-12,
        format!(
            "(a) {err_a:.1e}; (b) non-monotone seeds {bad_b:?}, mean sup error [{}]; \
             (c) non-monotone seeds {bad_c:?}, mean sup error [{}], deterministic switch {worst_c:.1e}",
            fmt(&mean_b),
            fmt(&mean_c)
        ),
    )
}

fn wong_zakai() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, jumps) in [
        ("single", JumpSource::None),
        ("ctmc", JumpSource::Ctmc { generator: Generator::two_state(2.0).unwrap(), initial: 0 }),
    ] {
        let cfg = ConvergenceConfig { jumps, ..ConvergenceConfig::default() };
        let (rep, _) = run_wong_zakai(&cfg, 0).map_err(|e| e.to_string())?;
        let g = rep.solution.gamma_hat;
        let pass = (0.35..=0.65).contains(&g) && rep.slope_check;
        ok &= pass;
        lines.push(format!(
            "{name}: γ̂ = {g:.3} (R² {:.3}), driver slope {:.3}, slope check {}, excluded {}",
            rep.solution.r_squared, rep.driver.gamma_hat, rep.slope_check, rep.excluded
        ));
    }
    verdict(ok, lines.join("; "))
}

fn tails() -> Outcome {
    let cfg = TailConfig { lambdas: vec![], ..TailConfig::default() };
    let (rep, _) = tail_experiment(&cfg, 0).map_err(|e| e.to_string())?;
    match rep.fit_x.fit() {
        Some(f) => verdict(
            f.r_squared >= 0.9 && f.slope < 0.0,
            format!("R² = {:.3}, slope = {:.3}, thresholds {:?}", f.r_squared, f.slope, f.thresholds),
        ),
        None => Err(format!("degenerate fit: {:?}", rep.fit_x)),
    }
}

fn jump_tails() -> Outcome {
    let counts = jump_count_samples(&Generator::two_state(2.0).unwrap(), 0, 1.0, 100_000, 707, 0)
        .map_err(|e| e.to_string())?;
    let rep = check_jump_tail(&counts, 3.0, 30).map_err(|e| e.to_string())?;
    let rel = (rep.mean - 2.0).abs() / 2.0;
    verdict(
        rel <= 0.02 && rep.holds,
        format!("mean {:.4} ({:.2}% off), envelope checked at {} thresholds, holds {}", rep.mean, 100.0 * rel, rep.checked.len(), rep.holds),
    )
}

fn integral_consistency() -> Outcome {
    let n = 1 << 12;
    let tol = 5.0 * (1.0 / n as f64).sqrt();
    let spec = GaussianSpec::brownian(1, 1.0).unwrap();
    let none = JumpTrajectory::constant(0, 1.0).unwrap();
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..10u64 {
        let b = sample(&spec, n, RngSeed::new(808, seed)).unwrap();
        let bt = b.values()[n];
        let geo = lift_piecewise_linear(&b).unwrap();
        let ito = geo.to_ito().unwrap();
        let ig = switching_rough_integral(&[ControlledPath::identity(&geo).unwrap()], &geo, &none).unwrap();
        let ii = switching_rough_integral(&[ControlledPath::identity(&ito).unwrap()], &ito, &none).unwrap();
        let eg = (ig.values().last().unwrap() - bt * bt / 2.0).abs();
        let ei = (ii.values().last().unwrap() - (bt * bt / 2.0 - 0.5)).abs();
        worst = (worst.0.max(eg), worst.1.max(ei));
    }
    let b = sample(&spec, n, RngSeed::new(808, 99)).unwrap();
    let rp = lift_piecewise_linear(&b).unwrap();
    let jumps = JumpTrajectory::new(vec![0.3, 0.71], vec![0, 1, 2], 1.0).unwrap();
    let cs = [1.5, -2.0, 0.25];
    let integrands: Vec<_> = cs.iter().map(|&c| ControlledPath::constant(&[c], &rp).unwrap()).collect();
    let got = *switching_rough_integral(&integrands, &rp, &jumps).unwrap().values().last().unwrap();
    let at = |t: f64| b.value_at(t)[0];
    let expected = cs[0] * (at(0.3) - at(0.0)) + cs[1] * (at(0.71) - at(0.3)) + cs[2] * (at(1.0) - at(0.71));
    let tele = (got - expected).abs();
    verdict(
        worst.0 <= tol && worst.1 <= tol && tele <= 1e-12,
        format!(
            "geometric {:.1e}, Itô {:.1e} (tol {tol:.1e}); telescoped two-jump gap {tele:.1e}",
            worst.0, worst.1
        ),
    )
}

fn fbm_and_2d() -> Outcome {
    let spec = GaussianSpec::fbm(0.3, 1, 1.0).unwrap();
    let trials = 100_000;
    let steps = 4;
    let mut prods = vec![Vec::with_capacity(trials); steps * steps];
    for t in 0..trials {
        let x = sample(&spec, steps, RngSeed::new(909, t as u64)).unwrap();
        for i in 0..steps {
            for j in i..steps {
                prods[i * steps + j].push(x.values()[i + 1] * x.values()[j + 1]);
            }
        }
    }
    let mut worst_z = 0.0f64;
    for i in 0..steps {
        for j in i..steps {
            let v = &prods[i * steps + j];
            let mean = v.iter().sum::<f64>() / trials as f64;
            let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
            let se = (var / trials as f64).sqrt();
            let (s, t) = ((i + 1) as f64 / steps as f64, (j + 1) as f64 / steps as f64);
            worst_z = worst_z.max((mean - fbm_covariance(0.3, s, t)).abs() / se);
        }
    }
    let times = SamplePath::uniform_times(4, 1.0);
    let bm = cov_grid(&GaussianSpec::brownian(1, 1.0).unwrap(), &times).unwrap();
    let full = IntervalIdx { lo: 0, hi: 4 };
    let v_bm = cov_2d_variation(&bm, 1.0, full, full, Cov2dMode::Exact { limit: 12 }).unwrap().value;
    let times = SamplePath::uniform_times(5, 1.0);
    let r: Vec<f64> = (0..36).map(|k| fbm_covariance(0.25, times[k / 6], times[k % 6])).collect();
    let grid = CovGrid::new(times, r.clone()).unwrap();
    let full = IntervalIdx { lo: 0, hi: 5 };
    let v_fbm = cov_2d_variation(&grid, 2.0, full, full, Cov2dMode::Exact { limit: 12 }).unwrap().value;
    let brute = brute_force_2d(&|i, j| r[i * 6 + j], 2.0, (0, 5), (0, 5)).sqrt();
    let gap = (v_fbm - brute).abs() / brute;
    verdict(
        worst_z <= 3.0 && v_bm == 1.0 && gap <= 1e-12,
        format!("fBm max |z| = {worst_z:.2}; Brownian 5×5 value {v_bm}; fBm H=0.25 gap {gap:.1e}"),
    )
}

fn reproducibility() -> Outcome {
    let cfg = ConvergenceConfig {
        n_ref: 1024,
        metric_steps: 256,
        lambdas: vec![8, 16, 32, 64],
        trials: 100,
        jumps: JumpSource::Ctmc { generator: Generator::two_state(2.0).unwrap(), initial: 0 },
        ..ConvergenceConfig::default()
    };
    let a = serde_json::to_string(&run_wong_zakai_raw(&cfg, 1).map_err(|e| e.to_string())?).unwrap();
    let b = serde_json::to_string(&run_wong_zakai_raw(&cfg, 0).map_err(|e| e.to_string())?).unwrap();
    let tcfg = TailConfig { steps: 64, lambdas: vec![8, 16], ..TailConfig::default() };
    let (_, ra) = tail_experiment(&tcfg, 1).map_err(|e| e.to_string())?;
    let (_, rb) = tail_experiment(&tcfg, 0).map_err(|e| e.to_string())?;
    let (ta, tb) = (serde_json::to_string(&ra.raw).unwrap(), serde_json::to_string(&rb.raw).unwrap());
    verdict(
        a == b && ta == tb && ra.raw_digest == rb.raw_digest,
        format!("Wong–Zakai raw {} bytes, tails raw {} bytes, digests {}", a.len(), ta.len(), &ra.raw_digest[..12]),
    )
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("chen", chen),
        ("pvar_oracle", pvar_oracle),
        ("greedy_algebra", greedy_algebra),
        ("solver_oracles", solver_oracles),
        ("wong_zakai_rate", wong_zakai),
        ("n_alpha_tails", tails),
        ("jump_tails", jump_tails),
        ("integral_consistency", integral_consistency),
        ("fbm_and_2d_variation", fbm_and_2d),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.1}s) {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {detail}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
