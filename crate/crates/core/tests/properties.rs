use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rieszcap::asymptotics::{log_limit_verify, multiscale_verify, LogLimitOptions, MultiscaleOptions};
use rieszcap::conformal::{dimension_dichotomy, length_exponent, ray_length, Completeness, ConformalModel, Length};
use rieszcap::geometry::{project_to_ball, AnnulusLadder, MetricChart, PointSet, Warp};
use rieszcap::lp::{solve_covering, DenseMatrix, LpOptions};
use rieszcap::measure::{density_scan, dyadic_radii, growth_certificate, vitali_point, DiscreteMeasure};
use rieszcap::potential::{eval_potential, eval_potential_scaled, potential_at, KernelSpec, Summation};
use rieszcap::scalar::{dist, norm};
use rieszcap::thinness::{classify, VerdictRule, Verdict};

fn points(n: usize, count: usize, half: f64, seed: u64) -> PointSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = PointSet::new(n);
    for _ in 0..count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
        p.push(&x).unwrap();
    }
    p
}

fn measure(n: usize, count: usize, half: f64, seed: u64) -> DiscreteMeasure<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let w: Vec<f64> = (0..count).map(|_| rng.gen_range(0.01..1.0)).collect();
    DiscreteMeasure::new(points(n, count, half, seed), w).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn projection_is_contractive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let n = rng.gen_range(2..6);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        assert!(dist(&project_to_ball(&x), &project_to_ball(&y)) <= dist(&x, &y) * (1.0 + 1e-15));
    }
}

#[test]
fn warped_distance_respects_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let charts = [
        MetricChart::warped(Warp::Diagonal { scales: vec![0.5, 2.0, 1.5] }).unwrap(),
        MetricChart::warped(Warp::Sine { amplitude: 0.4, frequency: 3.0 }).unwrap(),
    ];
    for chart in &charts {
        let l = chart.lipschitz();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let d = chart.distance(&x, &y);
            let e = dist(&x, &y);
            assert!(d <= l * e * (1.0 + 1e-12) && d * l >= e * (1.0 - 1e-12));
        }
    }
}

#[test]
fn vitali_point_is_argmin() {
    let mu = measure(3, 300, 1.5, 5);
    let samples = points(3, 40, 1.0, 6);
    let best = vitali_point(&mu, &samples, 10.0, 8).unwrap();
    for k in 0..samples.len() {
        let single = PointSet::from_rows(3, &[samples.get(k)]).unwrap();
        let other = vitali_point(&mu, &single, 10.0, 8).unwrap();
        assert!(best.ratio <= other.ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladder_tiles_punctured_ball(delta in 0.01f64..10.0, i0 in 1i32..4, m in 1usize..12, t in 0.0f64..1.0) {
        let ladder = AnnulusLadder::new(vec![0.0, 0.0, 0.0], delta, i0, m).unwrap();
        let lo = delta * 2f64.powi(-(i0 + m as i32 - 1));
        let hi = delta * 2f64.powi(1 - i0);
        let r = lo + t * (hi - lo);
        prop_assume!(r >= lo);
        let x = [r, 0.0, 0.0];
        prop_assert!(ladder.indices().any(|i| ladder.shell(i).unwrap().0.contains(&x)));
        for i in ladder.indices() {
            let (w, big) = ladder.shell(i).unwrap();
            if w.contains(&x) {
                prop_assert!(big.contains(&x));
            }
        }
    }

    #[test]
    fn ball_mass_monotone_and_closed(seed in 0u64..1000, r1 in 0.0f64..2.0, r2 in 0.0f64..2.0) {
        let mu = measure(3, 50, 1.0, seed);
        let c = [0.1, 0.0, -0.2];
        let (a, b) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(mu.ball_mass(&c, a) <= mu.ball_mass(&c, b));
        let (y, w) = mu.atom(0);
        let r = dist(y, &c);
        prop_assert!(mu.ball_mass(&c, r) >= w);
    }

    #[test]
    fn zero_exponent_density_is_outer_mass(seed in 0u64..1000) {
        let mu = measure(2, 40, 1.0, seed);
        let probes = points(2, 5, 0.5, seed + 1);
        let radii = dyadic_radii(1.0, 8);
        for (k, e) in density_scan(&mu, &probes, 0.0, &radii).unwrap().iter().enumerate() {
            let direct = mu.ball_mass(probes.get(k), 1.0);
            prop_assert!((e.sup - direct).abs() <= 1e-14 * direct, "{} vs {}", e.sup, direct);
        }
    }

    #[test]
    fn growth_certificate_holds(seed in 0u64..1000, d in 0.0f64..2.0) {
        let mu = measure(3, 60, 1.0, seed);
        let radii = dyadic_radii(1.0, 10);
        let p = [0.05, 0.1, 0.0];
        if let Some(c) = growth_certificate(&mu, &p, d, &radii).unwrap() {
            prop_assert!(c.holds(&mu, &radii));
            for r in &radii {
                prop_assert!(mu.ball_mass(&p, *r) <= c.constant * r.powf(d) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn potential_is_linear(seed in 0u64..1000, a in 0.0f64..3.0, b in 0.0f64..3.0, alpha in 1.1f64..3.0) {
        let mu = measure(3, 30, 1.0, seed);
        let nu = measure(3, 30, 1.0, seed + 7);
        let k = KernelSpec::new(3, alpha, if alpha == 3.0 { Some(8.0) } else { None }).unwrap();
        let x = [1.3, -0.4, 0.2];
        let lhs = potential_at(&mu.combine(a, &nu, b).unwrap(), &k, &x).unwrap().to_float();
        let rhs = a * potential_at(&mu, &k, &x).unwrap().to_float() + b * potential_at(&nu, &k, &x).unwrap().to_float();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn log_potential_is_linear(seed in 0u64..1000, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let mu = measure(2, 30, 1.0, seed);
        let nu = measure(2, 30, 1.0, seed + 7);
        let k = KernelSpec::log(2, 8.0).unwrap();
        let x = [0.3, -0.4];
        let lhs = potential_at(&mu.combine(a, &nu, b).unwrap(), &k, &x).unwrap().to_float();
        let rhs = a * potential_at(&mu, &k, &x).unwrap().to_float() + b * potential_at(&nu, &k, &x).unwrap().to_float();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn single_atom_kernel_decreases(alpha in 1.1f64..3.0, r1 in 0.01f64..3.0, r2 in 0.01f64..3.0) {
        prop_assume!(r1 != r2);
        let k = KernelSpec::new(3, alpha, if alpha == 3.0 { Some(8.0) } else { None }).unwrap();
        let mu = DiscreteMeasure::dirac(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let v1 = potential_at(&mu, &k, &[r1, 0.0, 0.0]).unwrap().to_float();
        let v2 = potential_at(&mu, &k, &[r2, 0.0, 0.0]).unwrap().to_float();
        prop_assert_eq!(r1 < r2, v1 > v2);
    }

    #[test]
    fn scaling_identity(seed in 0u64..1000, alpha in 1.1f64..3.0, li in 0usize..3) {
        let lambda = [0.5, 2.0, 10.0][li];
        let mu = measure(3, 40, 1.0, seed);
        let x = [1.5, 0.3, -0.7];
        let log = alpha == 3.0;
        let k = KernelSpec::new(3, alpha, if log { Some(8.0) } else { None }).unwrap();
        let base = potential_at(&mu, &k, &x).unwrap().to_float();
        let scaled = eval_potential_scaled(&mu, &k, lambda, &x).unwrap().to_float();
        let expect = if log { base } else { lambda.powf(alpha - 3.0) * base };
        prop_assert!(rel(scaled, expect) <= 1e-12);
    }

    #[test]
    fn bilipschitz_comparability(seed in 0u64..1000, alpha in 1.1f64..2.9, amp in 0.0f64..0.6) {
        let mu = measure(3, 30, 1.0, seed);
        let pts = points(3, 10, 2.0, seed + 3);
        let k = KernelSpec::riesz(3, alpha).unwrap();
        let chart = MetricChart::warped(Warp::Sine { amplitude: amp, frequency: 2.0 }).unwrap();
        let l = chart.lipschitz();
        let s = 3.0 - alpha;
        let e = eval_potential(&mu, &k, &pts, &MetricChart::Euclidean, Summation::Naive).unwrap();
        let w = eval_potential(&mu, &k, &pts, &chart, Summation::Naive).unwrap();
        for (a, b) in e.values.iter().zip(&w.values) {
            let (a, b) = (a.to_float(), b.to_float());
            prop_assert!(b <= a * l.powf(s) * (1.0 + 1e-12));
            prop_assert!(b >= a * l.powf(-s) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn lp_weak_duality(seed in 0u64..1000, m in 1usize..25, n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect();
        let a = DenseMatrix::new(m, n, data).unwrap();
        let feasible_rows = (0..m).all(|i| a.row(i).iter().any(|v| *v > 0.0));
        let res = solve_covering(&a, &LpOptions::default());
        if !feasible_rows {
            prop_assert!(res.is_err());
            return Ok(());
        }
        let sol = res.unwrap();
        prop_assert!(sol.dual_objective <= sol.objective * (1.0 + 1e-12));
        prop_assert!(sol.gap <= 1e-9);
        for i in 0..m {
            let s: f64 = (0..n).map(|j| a.get(i, j) * sol.primal[j]).sum();
            prop_assert!(s >= 1.0 - 1e-9);
        }
        for j in 0..n {
            let s: f64 = (0..m).map(|i| a.get(i, j) * sol.dual[i]).sum();
            prop_assert!(s <= 1.0 + 1e-9);
        }
        // Any feasible point, e.g. a scaled all-ones vector, costs at least the dual bound.
        let ones = vec![1.0; n];
        let cover = (0..m).map(|i| (0..n).map(|j| a.get(i, j) * ones[j]).sum::<f64>()).fold(f64::INFINITY, f64::min);
        prop_assert!(n as f64 / cover >= sol.dual_objective * (1.0 - 1e-12));
    }

    #[test]
    fn geometric_series_verdicts(q in 0.05f64..0.8, c in 0.01f64..10.0, len in 6usize..16) {
        let terms: Vec<f64> = (0..len).map(|i| c * q.powi(i as i32)).collect();
        let (v, tail) = classify(&terms, &VerdictRule::default());
        prop_assert_eq!(v, Verdict::Thin);
        prop_assert!(rel(tail.ratio, q) < 1e-9);
        let flat: Vec<f64> = (0..len).map(|i| c * (1.0 + 0.01 * (i % 2) as f64)).collect();
        prop_assert_eq!(classify(&flat, &VerdictRule::default()).0, Verdict::NonThin);
    }

    #[test]
    fn exponent_decreases_in_d(n in 5usize..9, d1 in 0.0f64..3.0, d2 in 0.0f64..3.0) {
        prop_assume!(d1 < d2);
        for model in [ConformalModel::scalar, ConformalModel::q_high] {
            let e1 = length_exponent(&model(n, d1)).unwrap();
            let e2 = length_exponent(&model(n, d2)).unwrap();
            prop_assert!(e2 < e1);
        }
    }

    #[test]
    fn lengths_match_closed_form(e in 0.0f64..0.95, c in 0.1f64..10.0, l0 in 0.01f64..5.0) {
        let model = ConformalModel::q4(e, 1.0).with_constant(c).with_l0(l0);
        let model = ConformalModel { mass: Some(e / c), ..model };
        let v = ray_length(&model, 10).unwrap();
        let exact = c * l0.powf(1.0 - e) / (1.0 - e);
        prop_assert_eq!(v.verdict, Length::Finite);
        prop_assert!(rel(v.length.unwrap(), exact) <= 1e-6);
    }
}

#[test]
fn dichotomy_flips_at_critical_dimension() {
    for n in 3..=8usize {
        let crit = (n as f64 - 2.0) / 2.0;
        let at = dimension_dichotomy(&ConformalModel::scalar(n, crit)).unwrap();
        let above = dimension_dichotomy(&ConformalModel::scalar(n, crit + 1e-9)).unwrap();
        assert_eq!(at.verdict, Completeness::CompletenessCompatible, "n={n}");
        assert_eq!(above.verdict, Completeness::Contradiction, "n={n}");
        if n >= 5 {
            let crit = (n as f64 - 4.0) / 2.0;
            let at = dimension_dichotomy(&ConformalModel::q_high(n, crit)).unwrap();
            let above = dimension_dichotomy(&ConformalModel::q_high(n, crit + 1e-9)).unwrap();
            assert_eq!(at.verdict, Completeness::CompletenessCompatible, "n={n}");
            assert_eq!(above.verdict, Completeness::Contradiction, "n={n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn log_weights_are_summable(seed in 0u64..1000, atom in 0.0f64..2.0) {
        let mut mu = measure(2, 200, 0.7, seed);
        if atom > 0.0 {
            mu = DiscreteMeasure::dirac(&[0.0, 0.0], atom).unwrap().combine(1.0, &mu, 1.0).unwrap();
        }
        let opts = LogLimitOptions { shells: 8, samples_per_shell: 20, diameter: 4.0, ..LogLimitOptions::default() };
        let r = log_limit_verify(&mu, &[0.0, 0.0], 0.125, &opts).unwrap();
        prop_assert!(r.weighted_sum <= r.weighted_bound * (1.0 + 1e-12));
        for w in r.shells.windows(2) {
            prop_assert!(w[1].weight <= w[0].weight);
        }
        for sh in &r.shells {
            prop_assert!(sh.ratios.iter().all(|q| q.is_finite()));
        }
    }

    #[test]
    fn multiscale_bounds_dominate(seed in 0u64..1000, lambda in 0.5f64..8.0) {
        let mu = measure(3, 200, 1.0, seed);
        let s = points(3, 3, 0.3, seed + 1);
        let opts = MultiscaleOptions { shells: 5, samples_per_shell: 30, lambda, ..MultiscaleOptions::default() };
        let r = match multiscale_verify(&mu, &s, 0.5, 1.5, 0.25, &opts) {
            Ok(r) => r,
            Err(rieszcap::Error::NoCertificate { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let sexp = 1.5 - r.d;
        for (k, sh) in r.shells.iter().enumerate() {
            prop_assert!(sh.bounds_hold);
            prop_assert_eq!(sh.budget, sh.mass / (lambda * 2f64.powi(sh.index).powf(sexp)));
            prop_assert!(rel(r.budget_partial_sums[k], r.budget_terms[..=k].iter().sum::<f64>()) < 1e-12);
            for smp in sh.samples.iter().filter(|s| !s.exceptional) {
                prop_assert!(smp.value.to_float() * smp.distance.powf(sexp) <= r.c_star);
            }
        }
        prop_assert!(norm(&r.point) <= 0.3 * 3f64.sqrt());
    }
}
