//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one line per criterion. `LDLAB_ACCEPT=2,5` restricts the run;
//! `LDLAB_C2_SAMPLES` overrides the stretched-exponent sample count.

use std::f64::consts::LN_2;
use std::time::Instant;

use rayon::prelude::*;

use ldlab_core::estimators::*;
use ldlab_core::exact_kernels::*;
use ldlab_core::parallel::with_workers;
use ldlab_core::rng::CounterRng;
use ldlab_core::tower::{deviation_mass, TowerModel};
use ldlab_core::{MapSpec, Observable, OrbitStream};

type Outcome = (bool, String);

const SEED: u64 = 20_240_601;
const WORKERS: [usize; 2] = [1, 8];

fn c1() -> Outcome {
    let f = |x: f64| x - 0.5;
    let one = (0..1000)
        .map(|i| {
            let x = (i as f64 + 0.5) / 1000.0;
            (apply_transfer(&f, 1, x).unwrap() - f(x) / 2.0).abs()
        })
        .fold(0.0, f64::max);
    // the sup of P^n f = 2^{-n} f is attained at x = 0, which the grid contains
    let sup = (0..=20)
        .map(|n| {
            let s = transfer_sup_norm(&f, n, 101).unwrap();
            let want = 2f64.powi(-(n as i32)) / 2.0;
            ((s - want) / want).abs()
        })
        .fold(0.0, f64::max);
    (
        one <= 1e-12 && sup <= 1e-12,
        format!("max|P f - f/2| = {one:.1e}, max rel err of sup-norm 2^-n/2 over n<=20 = {sup:.1e}"),
    )
}

fn c2_targets() -> (Vec<Observable>, Vec<TailTarget>) {
    let obs = vec![
        Observable::log_pow(1.0, 0.0).centered().unwrap(),
        Observable::log_pow(2.0, 0.0).centered().unwrap(),
    ];
    let mut targets = Vec::new();
    for (i, eps) in [(0, 0.3), (1, 3.0)] {
        for n in [25, 50, 100, 200, 400] {
            targets.push(TailTarget { obs: i, n, eps });
        }
    }
    (obs, targets)
}

fn c2_counts(samples: u64, workers: usize) -> Vec<TailEstimate> {
    let (obs, targets) = c2_targets();
    let ch = Channel::Orbit(MapSpec::doubling());
    with_workers(Some(workers), || {
        tail_mc_shared(&ch, &obs, &targets, Side::Upper, samples, SEED).unwrap()
    })
}

fn c2() -> Outcome {
    let samples = std::env::var("LDLAB_C2_SAMPLES")
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .map(|v| v as u64)
        .unwrap_or(100_000_000);
    let est = c2_counts(samples, 8);
    let a1 = fit_exponent(&est[..5]);
    let a2 = fit_exponent(&est[5..]);
    let (g1, g2) = match (a1, a2) {
        (Ok(a), Ok(b)) => (a.gamma_hat, b.gamma_hat),
        (a, b) => return (false, format!("fit failed: {:?} {:?}", a.err(), b.err())),
    };
    let counts: Vec<u64> = est.iter().map(|e| e.count).collect();
    (
        (0.35..=0.65).contains(&g1) && (0.20..=0.48).contains(&g2),
        format!("N={samples:e}: alpha=1 eps=0.3 gamma={g1:.3} in [0.35,0.65]; alpha=2 eps=3 gamma={g2:.3} in [0.20,0.48]; counts {counts:?}"),
    )
}

fn c3() -> Outcome {
    let map = MapSpec::doubling();
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    let mut sampled = 0;
    for alpha in [1.0, 2.0] {
        let obs = Observable::log_pow(alpha, 0.0);
        for n in [100, 400, 1600] {
            match lower_bound_construction(&map, &obs, n, 0.1, 1000, SEED) {
                Ok(c) => {
                    worst = worst.min(c.min_margin);
                    sampled += c.sampled;
                    failures += c.failures;
                }
                Err(e) => return (false, format!("alpha={alpha} n={n}: {e}")),
            }
        }
    }
    (
        failures == 0 && sampled == 6000,
        format!("eps=0.1, {sampled} points over alpha in {{1,2}} x n in {{100,400,1600}}: {failures} failures, min margin {worst:.3e}"),
    )
}

struct CylinderCase {
    obs: Observable,
    n: u32,
    eps: f64,
}

fn c4_cases() -> Vec<CylinderCase> {
    let mut rng = CounterRng::new(SEED, 4).cursor();
    (0..10)
        .map(|_| {
            let d = 1 + rng.below(8) as u32;
            let n = 2 + rng.below(31) as u32;
            let values: Vec<f64> = (0..1usize << d).map(|_| 2.0 * rng.open01() - 1.0).collect();
            let m = values.iter().sum::<f64>() / values.len() as f64;
            let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
            let obs = Observable::cylinder(values).unwrap();
            CylinderCase { obs, n, eps: sd * (0.5 + rng.open01()) / (n as f64).sqrt() }
        })
        .collect()
}

fn c4_counts(workers: usize) -> Vec<TailEstimate> {
    let ch = Channel::Orbit(MapSpec::doubling());
    with_workers(Some(workers), || {
        c4_cases()
            .iter()
            .map(|c| tail_mc_grid(&ch, &c.obs, &[c.n as u64], c.eps, Side::Upper, 10_000_000, SEED).unwrap().remove(0))
            .collect()
    })
}

fn c4() -> Outcome {
    let est = c4_counts(8);
    let mut ok = true;
    let mut detail = Vec::new();
    for (c, e) in c4_cases().iter().zip(&est) {
        let mean = c.obs.mean().unwrap();
        let range = 2.0;
        let dist = cylinder_dp(&c.obs, c.n, range * 1e-3).unwrap();
        let (lo, hi) = dist.tail_ge(c.n as f64 * (mean + c.eps));
        let se = e.standard_error_at(e.p_hat.max(lo).max(1.0 / e.samples as f64));
        let inside = e.p_hat >= lo - 4.0 * se && e.p_hat <= hi + 4.0 * se;
        ok &= inside;
        detail.push(format!("n={} p={:.4} in [{:.4},{:.4}]", c.n, e.p_hat, lo, hi));
    }
    (ok, detail.join("; "))
}

fn c5() -> Outcome {
    let obs = Observable::log_pow(1.0, 0.0).centered().unwrap();
    let curve = autocorrelation_curve(&obs, 18).unwrap();
    let f = |x: f64| x;
    let control: Vec<f64> = (0..=18).map(|n| autocorrelation_fn(&f, 0.5, n, &[]).unwrap()).collect();
    let err = control
        .iter()
        .enumerate()
        .map(|(n, c)| (c - 2f64.powi(-(n as i32)) / 12.0).abs())
        .fold(0.0, f64::max);
    let halving = control.windows(2).map(|w| (w[1] / w[0] - 0.5).abs()).fold(0.0, f64::max);
    (
        curve.log_slope <= -0.3 && err <= 1e-10 && halving <= 1e-10,
        format!(
            "-ln x slope over n in [2,18] = {:.3} (<= -0.3); control |C(n) - 2^-n/12| <= {err:.1e}, ratio error {halving:.1e}",
            curve.log_slope
        ),
    )
}

fn c6() -> Outcome {
    let inv = lp_decay_curve(&Observable::inv_pow(0.5), 1.0, 20).unwrap();
    let c = inv.value(2).unwrap() * (0.3f64 * 2.0).exp();
    let worst = (2..=20)
        .map(|n| inv.value(n).unwrap() / (c * (-0.3 * n as f64).exp()))
        .fold(0.0, f64::max);
    let log = lp_decay_curve(&Observable::log_pow(1.0, 0.0), 2.0, 18).unwrap();
    let ratio = (5..=18)
        .map(|n| log.value(n).unwrap() / log.value(n - 1).unwrap())
        .fold(0.0, f64::max);
    (
        worst <= 1.0 + 1e-12 && ratio <= 0.75,
        format!(
            "x^-1/2 L1: max ||P^n||/(C e^-0.3n) = {worst:.3} over n in [2,20], slope {:.3}; -ln x L2 max ratio {ratio:.3} over n in [5,18]",
            inv.log_slope
        ),
    )
}

fn c7() -> Outcome {
    match martingale_decompose(&Observable::log_pow(1.0, 0.0), 256, 0.2, LN_2) {
        Ok(m) => (
            m.telescoping_error <= 1e-10 && m.residual <= m.residual_bound && m.w_sup <= m.w_bound(),
            format!(
                "M={:.3} C={} telescoping {:.1e}; max|Pg| {:.3e} <= {:.3e}; ||w|| {:.3} <= {:.3}",
                m.m_n,
                m.c_n,
                m.telescoping_error,
                m.residual,
                m.residual_bound,
                m.w_sup,
                m.w_bound()
            ),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn c8_windows(n: u64, workers: usize) -> Vec<f64> {
    let obs = Observable::log_pow(1.0, 0.0);
    let i_alpha = exponential_rate(1.5);
    with_workers(Some(workers), || {
        (0..50u64)
            .into_par_iter()
            .map(|s| erdos_renyi_windows(&Channel::Iid, &obs, SEED, s, n, i_alpha).unwrap().w)
            .collect()
    })
}

fn c8() -> Outcome {
    let big = median(c8_windows(10_000_000, 8));
    let small = median(c8_windows(1000, 8));
    (
        (1.05..=1.95).contains(&big) && (big - 1.5).abs() < (small - 1.5).abs(),
        format!(
            "I={:.4}: median W at n=1e7 {big:.3} in [1.05,1.95], at n=1e3 {small:.3}",
            exponential_rate(1.5)
        ),
    )
}

fn c9_reports(workers: usize) -> Vec<ObstructionReport> {
    let obs = Observable::log_log(0.0).centered().unwrap();
    let map = MapSpec::tent();
    with_workers(Some(workers), || {
        (0..100u64)
            .into_par_iter()
            .map(|s| {
                let mut stream = OrbitStream::new(SEED, s);
                obstruction_check(&mut stream, &map, &obs, 1.0, 0.25, 1.0, 10_000_000).unwrap()
            })
            .collect()
    })
}

fn c9() -> Outcome {
    let reps = c9_reports(8);
    let n0 = reps[0].n0;
    let good = reps.iter().filter(|r| r.verified_count() > 0).count();
    let mean = reps.iter().map(|r| r.exceedances.len()).sum::<usize>() as f64 / reps.len() as f64;
    let exact = expected_hits(0.0, 1.0, n0 + 1, 10_000_000);
    let rel = (mean - exact).abs() / exact;
    (
        good >= 90 && rel <= 0.25,
        format!(
            "N0={n0}: {good}/100 seeds verified; mean hits past N0 {mean:.2} vs exact {exact:.2} (ln ratio {:.2}), rel err {rel:.3}",
            (1e7 / n0 as f64).ln()
        ),
    )
}

fn c10() -> Outcome {
    let map = MapSpec::doubling();
    let obs = Observable::log_pow(1.0, 0.0);
    let rep = pressure_diagnostics(&map, &obs, 0.5, &[5.0, 10.0, 20.0, 40.0], &[1, 2, 3, 4, 8], 100).unwrap();
    let infinite = rep.integrability.iter().all(|r| r.infinite == (r.n >= 2));
    let slopes: Vec<f64> = rep.rows.iter().map(|r| r.slope).collect();
    let increasing = slopes.windows(2).all(|w| w[1] > w[0]);
    let linear = rep.rows.iter().all(|r| (r.slope - (0.5 * r.m - LN_2)).abs() < 1e-12);
    let probe: Vec<f64> = [10, 20, 40].iter().map(|&j| partial_mgf_integral(0.5, 2, j).unwrap()).collect();
    let diverging = probe[2] - probe[1] > 1.9 * (probe[1] - probe[0]) && probe[1] > probe[0];
    (
        infinite && increasing && linear && diverging,
        format!(
            "t=0.5: infinite for n>=2 only: {infinite}; slopes {slopes:.3?}; n=2 partial integrals over [2^-J,1] J=10,20,40: {probe:.3?}"
        ),
    )
}

fn c11() -> Outcome {
    let k3 = TowerModel::build(3).unwrap();
    let cob = k3.verify_coboundary(1000, 1000, SEED);
    let k2 = TowerModel::build(2).unwrap();
    let resid = k2.stationarity_residual().max(k3.stationarity_residual());
    let curve = k2.log_mgf_curve(1.0, 2000).unwrap();
    let (hi, _) = curve.range(0, 200);
    let (_, lo) = curve.range(200, 2000);
    let (_, lo3) = k3.log_mgf_curve(1.0, 2000).unwrap().range(200, 2000);
    let masses: Vec<(u32, f64)> = [40u64, 80, 160]
        .iter()
        .map(|&n| (n as u32, deviation_mass(&k2.sn_distribution(n).unwrap(), n, 0.25)))
        .collect();
    let slope = fit_log_slope(&masses);
    let e_psi2 = k2.psi_second_moment();
    let var_ok = k2.variance_curve(300).unwrap().iter().all(|v| v.2 <= 4.0 * e_psi2);
    (
        cob.violations == 0
            && cob.trajectory_failures == 0
            && resid <= 1e-12
            && hi >= 0.2
            && lo <= 0.05
            && slope <= -0.05
            && var_ok,
        format!(
            "K=3: {} states, {} transitions, {} violations, {}/{} trajectory failures; residual {resid:.1e}; \
             K=2 MGF max(n<=200) {hi:.3}, min(200,2000] {lo:.3} (K=3: {lo3:.3}); deviation slope {slope:.3}; Var<=4E psi^2: {var_ok}",
            cob.states, cob.transitions_checked, cob.violations, cob.trajectory_failures, cob.trajectories
        ),
    )
}

fn c12() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let c2: Vec<Vec<u64>> =
        WORKERS.iter().map(|&w| c2_counts(1 << 20, w).iter().map(|e| e.count).collect()).collect();
    ok &= c2[0] == c2[1];
    lines.push(format!("c2(N=2^20) {}", c2[0] == c2[1]));
    let c4: Vec<Vec<u64>> = WORKERS.iter().map(|&w| c4_counts(w).iter().map(|e| e.count).collect()).collect();
    ok &= c4[0] == c4[1];
    lines.push(format!("c4 {}", c4[0] == c4[1]));
    let c8: Vec<Vec<u64>> = WORKERS
        .iter()
        .map(|&w| c8_windows(10_000_000, w).iter().map(|x| x.to_bits()).collect())
        .collect();
    ok &= c8[0] == c8[1];
    lines.push(format!("c8 {}", c8[0] == c8[1]));
    let c9: Vec<Vec<Vec<u64>>> = WORKERS
        .iter()
        .map(|&w| {
            c9_reports(w)
                .iter()
                .map(|r| r.exceedances.iter().flat_map(|e| [e.n, e.short_avg.to_bits(), e.er_avg.to_bits()]).collect())
                .collect()
        })
        .collect();
    ok &= c9[0] == c9[1];
    lines.push(format!("c9 {}", c9[0] == c9[1]));
    (ok, format!("workers {WORKERS:?} identical: {}", lines.join(", ")))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("LDLAB_ACCEPT")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    // `cargo test -- --list` and filters passed by the harness are ignored.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "transfer operator exactness", c1),
        (2, "stretched exponent", c2),
        (3, "lower-bound certificate", c3),
        (4, "oracle equivalence", c4),
        (5, "autocorrelation decay", c5),
        (6, "L^p decay", c6),
        (7, "martingale decomposition", c7),
        (8, "Erdos-Renyi i.i.d. channel", c8),
        (9, "obstruction mechanism", c9),
        (10, "pressure divergence", c10),
        (11, "tower", c11),
        (12, "determinism", c12),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t0 = Instant::now();
        let (ok, detail) = run();
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} [{:>7.1}s] {name}: {detail}", t0.elapsed().as_secs_f64());
        if !ok {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
