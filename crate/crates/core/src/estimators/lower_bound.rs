//! Explicit interval near the fixed point on which every orbit of length `n`
//! realises the deviation `S_n - n·mean ≥ nε`.

use serde::Serialize;

use crate::dynamics::{BitTape, MapKind, MapSpec, OrbitStream};
use crate::error::{LdError, Result};
use crate::observables::{Observable, ObservableKind};
use crate::rng::CounterRng;

/// Slack added to the critical `r`.
pub const R_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundCertificate {
    pub alpha: f64,
    pub n: u64,
    pub eps: f64,
    pub mean: f64,
    pub lambda: f64,
    pub omega: f64,
    pub r: f64,
    /// The interval is `[p, p + e^{-log_width}]`.
    pub log_width: f64,
    pub sampled: usize,
    pub failures: usize,
    /// `min (S_n - n·mean)/n - ε` over the sampled points.
    pub min_margin: f64,
    /// Density lower bound `m` (1 for Lebesgue).
    pub density: f64,
}

impl LowerBoundCertificate {
    /// `ln(m e^{-r n^ω})`, the certified lower bound on `ln p_n`.
    pub fn log_p_lower(&self) -> f64 {
        self.density.ln() - self.log_width
    }
}

/// `ω = 1/(1+α)` and `r = (mean+ε)^{1/α} + ln λ + 0.01`.
pub fn lower_bound_parameters(alpha: f64, mean: f64, eps: f64, lambda: f64) -> (f64, f64) {
    (1.0 / (1.0 + alpha), (mean + eps).powf(1.0 / alpha) + lambda.ln() + R_SLACK)
}

/// Tape whose orbit point `x_0` (doubling) or `s(x_0)` (tent) equals
/// `e^{-width}·u`, followed by fresh random bits.
fn tape_near_zero(kind: &MapKind, width: f64, u: f64, seed: u64, index: u64) -> BitTape {
    let bits = width / std::f64::consts::LN_2;
    let zeros = bits.floor() as usize;
    let v = (-(bits - zeros as f64) * std::f64::consts::LN_2).exp() * u;
    let mant = (v * 2f64.powi(64)) as u64;
    let mut prefix = Vec::with_capacity(zeros + 65);
    if matches!(kind, MapKind::Tent) {
        prefix.push(false);
    }
    prefix.extend(std::iter::repeat(false).take(zeros));
    prefix.extend((0..64).map(|b| (mant >> (63 - b)) & 1 == 1));
    BitTape::with_prefix(&prefix, seed, index)
}

/// Build the interval and certify it at `samples` stratified random points.
pub fn lower_bound_construction(
    map: &MapSpec,
    obs: &Observable,
    n: u64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<LowerBoundCertificate> {
    let ObservableKind::LogPow { alpha, point } = obs.kind else {
        return Err(LdError::Invalid("lower-bound construction needs a logpow observable".into()));
    };
    if !map.is_exact() || point != 0.0 || map.periodic_point != 0.0 || map.period != 1 {
        return Err(LdError::Invalid(
            "construction implemented at the fixed point 0 of the doubling or tent map".into(),
        ));
    }
    if !(eps > 0.0) || n == 0 || samples == 0 {
        return Err(LdError::Invalid("need eps > 0, n >= 1 and samples >= 1".into()));
    }
    let raw = Observable::log_pow(alpha, 0.0);
    let mean = raw.mean()?;
    let lambda = map.deriv_bound;
    let (omega, r) = lower_bound_parameters(alpha, mean, eps, lambda);
    let log_width = r * (n as f64).powf(omega);
    let rng = CounterRng::new(seed, u64::MAX);
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    for i in 0..samples {
        let u = ((i as f64 + rng.open01(i as u64)) / samples as f64).min(1.0 - 2f64.powi(-30));
        let tape = tape_near_zero(&map.kind, log_width, u, seed, i as u64);
        let mut stream = OrbitStream::from_tape(tape);
        let mut s = 0.0;
        for t in 0..n {
            let pt = stream.point(&map.kind, t);
            s += raw.eval_point(stream.tape_mut(), pt)?;
        }
        let margin = (s - n as f64 * mean) / n as f64 - eps;
        min_margin = min_margin.min(margin);
        if margin < 0.0 {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(LdError::Certificate {
            n,
            detail: format!("{failures} of {samples} sampled points miss the deviation"),
        });
    }
    Ok(LowerBoundCertificate {
        alpha,
        n,
        eps,
        mean,
        lambda,
        omega,
        r,
        log_width,
        sampled: samples,
        failures,
        min_margin,
        density: 1.0,
    })
}
