//! Monte Carlo estimation of Birkhoff-sum tail probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::PathValues;
use crate::dynamics::MapSpec;
use crate::error::{LdError, Result};
use crate::observables::Observable;

pub const MIN_SAMPLES: u64 = 10_000;
/// Counts below this mark an estimate as unreliable.
pub const RELIABLE_COUNT: u64 = 10;
const Z95: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 1024;

/// Where the sequence `x_0, x_1, ...` fed to the observable comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Channel {
    /// Orbit of a Lebesgue-random point. Exact for doubling and tent.
    Orbit(MapSpec),
    /// i.i.d. uniform points; `-ln x` is drawn directly as an Exp(1) variate.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
    TwoSided,
}

impl std::str::FromStr for Side {
    type Err = LdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Side::Upper),
            "lower" => Ok(Side::Lower),
            "two-sided" | "both" => Ok(Side::TwoSided),
            _ => Err(LdError::Invalid(format!("unknown side '{s}'"))),
        }
    }
}

impl Side {
    #[inline]
    fn hit(self, dev: f64, thr: f64) -> bool {
        match self {
            Side::Upper => dev >= thr,
            Side::Lower => dev <= -thr,
            Side::TwoSided => dev.abs() >= thr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub channel: Channel,
    pub obs: Observable,
    pub n: u64,
    pub eps: f64,
    pub side: Side,
    pub samples: u64,
    pub seed: u64,
}

/// Binomial estimate of `μ(S_n - n·mean ≥ nε)` (or the lower/two-sided event).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub n: u64,
    pub eps: f64,
    pub side: Side,
    pub count: u64,
    pub samples: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub unreliable: bool,
}

impl TailEstimate {
    pub fn from_count(n: u64, eps: f64, side: Side, count: u64, samples: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(count, samples);
        TailEstimate {
            n,
            eps,
            side,
            count,
            samples,
            p_hat: count as f64 / samples as f64,
            ci_lo,
            ci_hi,
            unreliable: count < RELIABLE_COUNT,
        }
    }

    /// Binomial standard error `sqrt(p(1-p)/N)` at the given probability.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(count: u64, samples: u64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p = count as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One `(observable, n, ε)` tail event in a shared run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailTarget {
    pub obs: usize,
    pub n: u64,
    pub eps: f64,
}

/// Estimates for several tail events from one shared set of sample paths.
/// Observables that are functions of the same coordinate share its
/// evaluation along the path.
///
/// Hit counts are integers reduced over fixed chunks of sample indices, so
/// they are identical for any worker count.
pub fn tail_mc_shared(
    channel: &Channel,
    observables: &[Observable],
    targets: &[TailTarget],
    side: Side,
    samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if samples < MIN_SAMPLES {
        return Err(LdError::Invalid(format!("need at least {MIN_SAMPLES} samples")));
    }
    if targets.iter().any(|t| !(t.eps > 0.0) || t.obs >= observables.len()) {
        return Err(LdError::Invalid("each target needs eps > 0 and a valid observable".into()));
    }
    let means = observables.iter().map(|o| o.mean()).collect::<Result<Vec<_>>>()?;
    let mut ns: Vec<u64> = targets.iter().map(|t| t.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let slot: Vec<usize> = targets.iter().map(|t| ns.binary_search(&t.n).unwrap()).collect();
    let k = observables.len();
    let chunks = samples.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let mut counts = vec![0u64; targets.len()];
            // sums[slot * k + obs] = S_{ns[slot]} of that observable
            let mut sums = vec![0.0; ns.len() * k];
            let mut acc = vec![0.0; k];
            let mut vals = vec![0.0; k];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut path = PathValues::multi(channel, observables, seed, i);
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut t = 0;
                for (s, &n) in ns.iter().enumerate() {
                    while t < n {
                        path.next_values(&mut vals)?;
                        acc.iter_mut().zip(&vals).for_each(|(a, v)| *a += v);
                        t += 1;
                    }
                    sums[s * k..(s + 1) * k].copy_from_slice(&acc);
                }
                for (j, tg) in targets.iter().enumerate() {
                    let nf = tg.n as f64;
                    let dev = sums[slot[j] * k + tg.obs] - nf * means[tg.obs];
                    if side.hit(dev, nf * tg.eps) {
                        counts[j] += 1;
                    }
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; targets.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(targets
        .iter()
        .zip(counts)
        .map(|(t, c)| TailEstimate::from_count(t.n, t.eps, side, c, samples))
        .collect())
}

/// Estimates for several `(n, ε)` pairs of one observable from shared paths.
pub fn tail_mc_multi(
    channel: &Channel,
    obs: &Observable,
    pairs: &[(u64, f64)],
    side: Side,
    samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    let targets: Vec<_> = pairs.iter().map(|&(n, eps)| TailTarget { obs: 0, n, eps }).collect();
    tail_mc_shared(channel, std::slice::from_ref(obs), &targets, side, samples, seed)
}

/// Estimates for an n-grid at fixed `ε` from shared sample paths.
pub fn tail_mc_grid(
    channel: &Channel,
    obs: &Observable,
    ns: &[u64],
    eps: f64,
    side: Side,
    samples: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    let pairs: Vec<_> = ns.iter().map(|&n| (n, eps)).collect();
    tail_mc_multi(channel, obs, &pairs, side, samples, seed)
}

pub fn tail_mc(q: &TailQuery) -> Result<TailEstimate> {
    let mut v = tail_mc_multi(&q.channel, &q.obs, &[(q.n, q.eps)], q.side, q.samples, q.seed)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (c, n) in [(0, 10_000), (3, 10_000), (5_000, 10_000), (10_000, 10_000)] {
            let (lo, hi) = wilson_interval(c, n);
            let p = c as f64 / n as f64;
            assert!(lo <= p && p <= hi);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
        // Reference value for 10 successes in 100 trials.
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.05522).abs() < 1e-4 && (hi - 0.17436).abs() < 1e-4);
    }

    #[test]
    fn impossible_event_for_bounded_observable() {
        let (obs, rep) = Observable::log_pow(1.0, 0.0)
            .truncate(crate::TruncationSchedule::LevelCut { level: 3.0 })
            .unwrap();
        let q = TailQuery {
            channel: Channel::Orbit(MapSpec::doubling()),
            obs,
            n: 50,
            eps: rep.sup_norm + 0.1,
            side: Side::Upper,
            samples: MIN_SAMPLES,
            seed: 1,
        };
        let est = tail_mc(&q).unwrap();
        assert_eq!(est.count, 0);
        assert_eq!(est.p_hat, 0.0);
        assert!(est.unreliable);
    }

    #[test]
    fn iid_exponential_matches_gamma_tail() {
        // S_20 of Exp(1) variables is Gamma(20, 1).
        use statrs::distribution::{ContinuousCDF, Gamma};
        let obs = Observable::log_pow(1.0, 0.0);
        let est = tail_mc(&TailQuery {
            channel: Channel::Iid,
            obs,
            n: 20,
            eps: 0.3,
            side: Side::Upper,
            samples: 200_000,
            seed: 5,
        })
        .unwrap();
        let exact = 1.0 - Gamma::new(20.0, 1.0).unwrap().cdf(26.0);
        let se = est.standard_error_at(exact);
        assert!((est.p_hat - exact).abs() < 4.0 * se, "{} vs {exact}", est.p_hat);
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let obs = Observable::log_pow(1.0, 0.0);
        let run = |w| {
            crate::parallel::with_workers(Some(w), || {
                tail_mc_grid(
                    &Channel::Orbit(MapSpec::doubling()),
                    &obs,
                    &[10, 20, 40],
                    0.3,
                    Side::TwoSided,
                    20_000,
                    9,
                )
                .unwrap()
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
    }

    #[test]
    fn shared_run_matches_separate_runs() {
        let a = Observable::log_pow(1.0, 0.0).centered().unwrap();
        let b = Observable::log_pow(2.0, 0.0).centered().unwrap();
        let ch = Channel::Orbit(MapSpec::doubling());
        let targets = [
            TailTarget { obs: 0, n: 30, eps: 0.3 },
            TailTarget { obs: 1, n: 30, eps: 2.0 },
            TailTarget { obs: 1, n: 60, eps: 2.0 },
        ];
        let shared = tail_mc_shared(&ch, &[a.clone(), b.clone()], &targets, Side::Upper, 20_000, 4).unwrap();
        let sa = tail_mc_multi(&ch, &a, &[(30, 0.3)], Side::Upper, 20_000, 4).unwrap();
        let sb = tail_mc_multi(&ch, &b, &[(30, 2.0), (60, 2.0)], Side::Upper, 20_000, 4).unwrap();
        assert_eq!(shared[0], sa[0]);
        assert_eq!(shared[1..], sb[..]);
    }

    #[test]
    fn larger_eps_is_rarer() {
        let obs = Observable::log_pow(1.0, 0.0);
        let ch = Channel::Orbit(MapSpec::tent());
        let est = tail_mc_multi(&ch, &obs, &[(40, 0.1), (40, 0.3), (40, 0.6)], Side::Upper, 20_000, 2).unwrap();
        assert!(est[0].count >= est[1].count && est[1].count >= est[2].count);
    }

    #[test]
    fn sample_budget_is_enforced() {
        let q = TailQuery {
            channel: Channel::Iid,
            obs: Observable::log_pow(1.0, 0.0),
            n: 5,
            eps: 0.1,
            side: Side::Upper,
            samples: 100,
            seed: 0,
        };
        assert!(matches!(tail_mc(&q), Err(LdError::Invalid(_))));
    }
}
