mod common;

use proptest::prelude::*;
use roughswitch::greedy::{check_subadditivity, greedy_sequence, Control};
use roughswitch::lift::Flavor;
use roughswitch::variation::{
    cov_2d_variation, p_variation, path_p_variation, pvar_control, rho_pvar_metric, second_level_p_variation,
    Cov2dMode, CovGrid,
};
use roughswitch::{lift_piecewise_linear, IntervalIdx};

use common::{brute_force_2d, brute_force_pvar_power, random_path, rng};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn chen_holds_for_lifts(seed in any::<u64>(), steps in 1usize..40, dim in 1usize..4) {
        let rp = lift_piecewise_linear(&random_path(&mut rng(seed), steps, dim)).unwrap();
        let rep = rp.check_chen(1e-10);
        prop_assert!(rep.passed, "{:?}", rep);
    }

    #[test]
    fn dp_matches_enumeration(seed in any::<u64>(), steps in 1usize..11, p in 1.0f64..4.0) {
        let path = random_path(&mut rng(seed), steps, 2);
        let dp = path_p_variation(&path, p, path.full_interval()).unwrap();
        let f = |i, j| common::norm(&path.increment(IntervalIdx { lo: i, hi: j }).unwrap());
        let brute = brute_force_pvar_power(&f, p, 0, steps);
        prop_assert!((dp.power() - brute).abs() <= 1e-12 * brute.max(1.0));
    }

    #[test]
    fn engine_matches_plain_dp(seed in any::<u64>(), steps in 1usize..60, p in 1.0f64..4.0) {
        let path = random_path(&mut rng(seed), steps, 2);
        let iv = path.full_interval();
        let fast = path_p_variation(&path, p, iv).unwrap();
        let plain = p_variation(|i, j| common::norm(&path.increment(IntervalIdx { lo: i, hi: j }).unwrap()), p, iv).unwrap();
        prop_assert!((fast.value - plain.value).abs() <= 1e-10 * plain.value.max(1.0));
    }

    #[test]
    fn pvar_decreases_in_p(seed in any::<u64>(), steps in 1usize..50, p in 1.0f64..3.0, dp in 0.0f64..2.0) {
        let path = random_path(&mut rng(seed), steps, 1);
        let iv = path.full_interval();
        let a = path_p_variation(&path, p, iv).unwrap().value;
        let b = path_p_variation(&path, p + dp, iv).unwrap().value;
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn pvar_monotone_in_interval(seed in any::<u64>(), steps in 2usize..50, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let path = random_path(&mut rng(seed), steps, 2);
        let (lo, hi) = ((a.min(b) * steps as f64) as usize, (a.max(b) * steps as f64).ceil() as usize);
        let inner = path_p_variation(&path, 2.5, IntervalIdx { lo, hi }).unwrap().value;
        let outer = path_p_variation(&path, 2.5, path.full_interval()).unwrap().value;
        prop_assert!(inner <= outer * (1.0 + 1e-12));
    }

    #[test]
    fn control_is_superadditive(seed in any::<u64>(), steps in 2usize..40, u in 0.0f64..1.0) {
        let rp = lift_piecewise_linear(&random_path(&mut rng(seed), steps, 2)).unwrap();
        let w = pvar_control(&rp, 2.5).unwrap();
        let mid = ((u * steps as f64) as usize).clamp(1, steps - 1);
        let total = w.eval(0, steps);
        prop_assert!(w.eval(0, mid) + w.eval(mid, steps) <= total * (1.0 + 1e-12) + 1e-15);
        prop_assert_eq!(w.eval(mid, mid), 0.0);
    }

    #[test]
    fn greedy_counts_subadditive(seed in any::<u64>(), steps in 2usize..40, alpha in 0.05f64..2.0) {
        let mut r = rng(seed);
        let rp = lift_piecewise_linear(&random_path(&mut r, steps, 1)).unwrap();
        let w = pvar_control(&rp, 2.2).unwrap();
        let partition: Vec<usize> = (0..=steps).filter(|&k| k == 0 || k == steps || k % 3 == 0).collect();
        prop_assert!(check_subadditivity(&w, alpha, &partition).unwrap().holds);
    }

    #[test]
    fn greedy_steps_reach_alpha(seed in any::<u64>(), steps in 2usize..40, alpha in 0.05f64..2.0) {
        let rp = lift_piecewise_linear(&random_path(&mut rng(seed), steps, 2)).unwrap();
        let w = pvar_control(&rp, 2.5).unwrap();
        let g = greedy_sequence(&w, alpha, rp.base().full_interval()).unwrap();
        for pair in g.taus.windows(2) {
            if pair[1] < steps {
                prop_assert!(w.eval(pair[0], pair[1]) >= alpha);
                prop_assert!(w.eval(pair[0], pair[1] - 1) < alpha);
            }
        }
    }

    #[test]
    fn refinement_keeps_second_level(seed in any::<u64>(), steps in 1usize..20, extra in proptest::collection::vec(0.0f64..1.0, 0..5)) {
        let rp = lift_piecewise_linear(&random_path(&mut rng(seed), steps, 2)).unwrap();
        let fine = rp.refine(&extra).unwrap();
        let idx = |t: f64| fine.times().iter().position(|&s| (s - t).abs() < 1e-12).unwrap();
        let (lo, hi) = (rp.times()[0], rp.times()[steps]);
        let coarse = rp.eval_second(rp.base().full_interval()).unwrap();
        let refined = fine.eval_second(IntervalIdx { lo: idx(lo), hi: idx(hi) }).unwrap();
        prop_assert!(coarse.max_abs_diff(&refined) < 1e-10);
    }

    #[test]
    fn ito_shift_is_half_identity(seed in any::<u64>(), steps in 1usize..20, dim in 1usize..4) {
        let rp = lift_piecewise_linear(&random_path(&mut rng(seed), steps, dim)).unwrap();
        let ito = rp.to_ito().unwrap();
        prop_assert_eq!(ito.flavor(), Flavor::Ito);
        let iv = rp.base().full_interval();
        let diff = rp.eval_second(iv).unwrap().max_abs_diff(&ito.eval_second(iv).unwrap());
        // X2_geo - X2_ito = (T/2) I on the full interval
        prop_assert!((diff - rp.base().horizon() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rho_metric_is_symmetric(seed in any::<u64>(), steps in 1usize..30) {
        let mut r = rng(seed);
        let a = lift_piecewise_linear(&random_path(&mut r, steps, 2)).unwrap();
        let path_b = random_path(&mut r, steps, 2).resample(a.times()).unwrap();
        let b = lift_piecewise_linear(&path_b).unwrap();
        let iv = a.base().full_interval();
        let ab = rho_pvar_metric(&a, &b, 2.5, iv).unwrap();
        let ba = rho_pvar_metric(&b, &a, 2.5, iv).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert_eq!(rho_pvar_metric(&a, &a, 2.5, iv).unwrap(), 0.0);
    }

    #[test]
    fn second_level_below_first_squared(seed in any::<u64>(), steps in 1usize..30) {
        // |X2_{s,t}| ≤ |X_{s,t}|²/2 summed along the path bounds X2's p/2-variation by X's p-variation
        let rp = lift_piecewise_linear(&random_path(&mut rng(seed), steps, 1)).unwrap();
        let iv = rp.base().full_interval();
        let second = second_level_p_variation(&rp, 2.5, iv).unwrap().value;
        let first = path_p_variation(rp.base(), 2.5, iv).unwrap().value;
        prop_assert!(second <= first * first / 2.0 * (1.0 + 1e-12));
    }

    #[test]
    fn cov2d_exact_matches_pairs(seed in any::<u64>(), points in 2usize..6, rho in 1.0f64..2.5) {
        let mut r = rng(seed);
        let path = random_path(&mut r, points + 1, points);
        let times = path.times()[..points].to_vec();
        // a Gram matrix is positive semi-definite
        let gram: Vec<f64> = (0..points * points)
            .map(|k| path.point(k / points).iter().zip(path.point(k % points)).map(|(a, b)| a * b).sum())
            .collect();
        let grid = CovGrid::new(times, gram.clone()).unwrap();
        let iv = IntervalIdx { lo: 0, hi: points - 1 };
        let exact = cov_2d_variation(&grid, rho, iv, iv, Cov2dMode::Exact { limit: 12 }).unwrap();
        let descent = cov_2d_variation(&grid, rho, iv, iv, Cov2dMode::Descent).unwrap();
        let brute = brute_force_2d(&|i, j| gram[i * points + j], rho, (0, points - 1), (0, points - 1)).powf(1.0 / rho);
        prop_assert!((exact.value - brute).abs() <= 1e-10 * brute.max(1.0));
        prop_assert!(descent.value <= exact.value * (1.0 + 1e-12));
    }
}
