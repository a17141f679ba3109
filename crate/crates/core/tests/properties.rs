use proptest::prelude::*;

use ldlab_core::dynamics::{orbit_point, MapKind};
use ldlab_core::estimators::*;
use ldlab_core::exact_kernels::*;
use ldlab_core::parallel::with_workers;
use ldlab_core::tower::TowerModel;
use ldlab_core::{MapSpec, Observable, ObservableKind, OrbitStream, TruncationSchedule};

fn tent_fixed(w: u128) -> u128 {
    if w >> 127 == 0 {
        w << 1
    } else {
        (!w) << 1
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tent_semiconjugacy(seed in any::<u64>(), idx in 0u64..1000, n in 0u64..1000) {
        let mut s = OrbitStream::new(seed, idx);
        let a = s.fixed(&MapKind::Tent, n).unwrap();
        let b = s.fixed(&MapKind::Tent, n + 1).unwrap();
        prop_assert!(tent_fixed(a).abs_diff(b) <= 16);
    }

    #[test]
    fn doubling_is_a_bit_shift(seed in any::<u64>(), n in 0u64..5000) {
        let mut s = OrbitStream::new(seed, 0);
        let a = s.fixed(&MapKind::Doubling, n).unwrap();
        let b = s.fixed(&MapKind::Doubling, n + 1).unwrap();
        prop_assert_eq!(a << 1, b & !1);
    }

    #[test]
    fn orbit_points_ignore_evaluation_order(seed in any::<u64>(), idx in 0u64..100, ns in prop::collection::vec(0u64..3000, 1..8)) {
        let mut shared = OrbitStream::new(seed, idx);
        let forward: Vec<f64> = ns.iter().map(|&n| orbit_point(&mut shared, &MapKind::Tent, n).unwrap()).collect();
        for (&n, &x) in ns.iter().zip(&forward).rev() {
            let mut fresh = OrbitStream::new(seed, idx);
            prop_assert_eq!(orbit_point(&mut fresh, &MapKind::Tent, n).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn truncations_stay_below_phi(alpha in 0.2f64..3.0, level in 0.1f64..20.0, beta in 0.05f64..0.95, n in 1usize..500, x in 1e-12f64..1.0) {
        let phi = Observable::log_pow(alpha, 0.0);
        let raw = phi.eval(x).unwrap();
        let (h, _) = phi.truncate(TruncationSchedule::LevelCut { level }).unwrap();
        let hv = h.eval_unchecked(x);
        prop_assert!((0.0..=raw + 1e-12).contains(&hv));
        let (g, _) = phi.truncate(TruncationSchedule::RadiusCut { beta, n }).unwrap();
        prop_assert!(g.eval_unchecked(x) <= raw + 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form_means(alpha in 0.2f64..3.0, p in prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]), beta in 0.05f64..0.9) {
        let lp = Observable::log_pow(alpha, p);
        prop_assert!((lp.mean().unwrap() - lp.mean_by_quadrature().unwrap()).abs() <= 1e-9 * lp.mean().unwrap().max(1.0));
        let ip = Observable::inv_pow(beta);
        prop_assert!((ip.mean().unwrap() - ip.mean_by_quadrature().unwrap()).abs() <= 1e-9 * ip.mean().unwrap());
    }

    #[test]
    fn sandwich_contains_enumeration(d in 1u32..4, n in 1u32..8, vals in prop::collection::vec(-2.0f64..2.0, 8)) {
        let values: Vec<f64> = vals[..1 << d].to_vec();
        let obs = Observable::cylinder(values.clone()).unwrap();
        let dist = cylinder_dp(&obs, n, 0.01).unwrap();
        // every x in a depth n+d-1 cylinder has the same S_n
        let bits = n + d - 1;
        let mut sums: Vec<f64> = (0..1u64 << bits)
            .map(|c| (0..n).map(|t| values[((c >> (bits - d - t)) & ((1 << d) - 1)) as usize]).sum())
            .collect();
        sums.sort_by(|a, b| a.total_cmp(b));
        let total = sums.len() as f64;
        for (b, (lo, hi)) in dist.cdf_bounds().iter().enumerate() {
            let v = dist.value(b);
            let f = sums.partition_point(|s| *s <= v + 1e-9) as f64 / total;
            prop_assert!(*lo <= f + 1e-12 && f <= *hi + 1e-12, "bucket {b}: {lo} <= {f} <= {hi}");
        }
    }

    #[test]
    fn wilson_interval_is_proper(samples in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let count = (frac * samples as f64) as u64;
        let (lo, hi) = wilson_interval(count, samples);
        let p = count as f64 / samples as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-15 && p <= hi + 1e-15 && hi <= 1.0);
    }

    #[test]
    fn tower_laws_are_exact(k in 1u32..=2, n in 1u64..60) {
        let m = TowerModel::build(k).unwrap();
        let pmf = m.sn_distribution(n).unwrap();
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = pmf.iter().enumerate().map(|(i, p)| p * (i as f64 - n as f64)).sum();
        prop_assert!(mean.abs() < 1e-10);
        let cap = 12f64.powi(k as i32);
        let outside: f64 = pmf.iter().enumerate().filter(|(i, _)| (*i as f64 - n as f64).abs() > cap).map(|(_, p)| p).sum();
        prop_assert_eq!(outside, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mean_zero_is_preserved(n in 0u32..=8, which in 0usize..3) {
        let obs = [Observable::log_pow(1.0, 0.0), Observable::log_pow(2.0, 0.5), Observable::inv_pow(0.3)][which].clone();
        let mean = obs.mean().unwrap();
        let f = |x: f64| obs.eval_unchecked(x) - mean;
        let total = ldlab_core::quadrature::integrate_split(
            |x| apply_transfer(&f, n, x).unwrap(),
            0.0,
            1.0,
            &[],
            &[0.0, 0.5, 1.0],
            ldlab_core::quadrature::Tolerance { abs: 1e-12, rel: 1e-10 },
        );
        prop_assert!(total.value.abs() < 1e-7, "{}", total.value);
    }

    #[test]
    fn hit_counts_are_nested_in_eps(seed in any::<u64>(), n in 5u64..40, e1 in 0.05f64..1.0, de in 0.01f64..1.0) {
        let ch = Channel::Orbit(MapSpec::tent());
        let obs = Observable::log_log(0.0);
        let est = tail_mc_multi(&ch, &obs, &[(n, e1), (n, e1 + de)], Side::TwoSided, 10_000, seed).unwrap();
        prop_assert!(est[0].count >= est[1].count);
    }

    #[test]
    fn hit_counts_ignore_worker_count(seed in any::<u64>(), n in 5u64..60) {
        let ch = Channel::Orbit(MapSpec::doubling());
        let obs = Observable::log_pow(1.5, 0.0);
        let counts: Vec<u64> = [1, 2, 8]
            .iter()
            .map(|&w| with_workers(Some(w), || tail_mc_grid(&ch, &obs, &[n], 0.4, Side::Upper, 20_000, seed).unwrap()[0].count))
            .collect();
        prop_assert!(counts.iter().all(|&c| c == counts[0]));
    }

    #[test]
    fn certificate_bound_is_respected_by_monte_carlo(n in 2u64..9, alpha in prop::sample::select(vec![1.0, 2.0])) {
        let obs = Observable::log_pow(alpha, 0.0);
        let cert = lower_bound_construction(&MapSpec::doubling(), &obs, n, 0.1, 200, 3).unwrap();
        let samples = 200_000u64;
        let bound = 0.5 * cert.log_p_lower().exp();
        let est = tail_mc_grid(&Channel::Orbit(MapSpec::doubling()), &obs, &[n], 0.1, Side::Upper, samples, 5).unwrap();
        if bound > 50.0 / samples as f64 {
            prop_assert!(est[0].p_hat >= bound, "{} < {bound}", est[0].p_hat);
        }
    }
}

#[test]
fn orbit_points_are_uniform() {
    // Kolmogorov-Smirnov at the 1% level
    let m = 10_000;
    for (kind, n) in [(MapKind::Doubling, 37u64), (MapKind::Tent, 500)] {
        let mut xs: Vec<f64> = (0..m)
            .map(|i| orbit_point(&mut OrbitStream::new(99, i), &kind, n).unwrap())
            .collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / m as f64).abs().max(((i + 1) as f64 / m as f64 - x).abs()))
            .fold(0.0, f64::max);
        assert!(ks <= 1.63 / (m as f64).sqrt(), "{kind:?}: {ks}");
    }
}

#[test]
fn verified_exceedances_beat_the_level() {
    let obs = Observable::log_log(0.0).centered().unwrap();
    let mut s = OrbitStream::new(4, 4);
    let rep = obstruction_check(&mut s, &MapSpec::tent(), &obs, 1.0, 0.25, 1.0, 2_000_000).unwrap();
    for e in rep.exceedances.iter().filter(|e| e.verified) {
        let mut path = OrbitStream::new(4, 4);
        let avg: f64 = (0..e.er_len)
            .map(|j| {
                let pt = path.point(&MapKind::Tent, e.n + j);
                obs.eval_point(path.tape_mut(), pt).unwrap()
            })
            .sum::<f64>()
            / e.er_len as f64;
        assert!(avg > rep.alpha);
    }
    assert!(matches!(obs.kind, ObservableKind::LogLog { .. }));
}
