//! Maximal window averages `max_{0≤j≤n-ℓ} S_ℓ∘T^j / ℓ` at the
//! Erdős–Rényi scale `ℓ = ⌊ln n / I⌋`.

use std::collections::VecDeque;

use serde::Serialize;

use super::path::PathValues;
use super::tail::Channel;
use crate::error::{LdError, Result};
use crate::observables::Observable;

const RESUM_EVERY: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStat {
    pub n: u64,
    pub ell: u64,
    pub w: f64,
    pub argmax: u64,
}

/// `⌊ln n / I⌋`.
pub fn er_window_length(n: u64, i_alpha: f64) -> u64 {
    ((n as f64).ln() / i_alpha).floor() as u64
}

/// Sliding maximum of window averages over the first `n` values of `next`,
/// in `O(n)` time and `O(ℓ)` memory.
pub fn max_window_average(
    mut next: impl FnMut() -> Result<f64>,
    n: u64,
    ell: u64,
) -> Result<WindowStat> {
    if ell == 0 || ell > n {
        return Err(LdError::Invalid(format!("window length {ell} must lie in 1..={n}")));
    }
    let mut buf = VecDeque::with_capacity(ell as usize);
    let mut sum = 0.0;
    for _ in 0..ell {
        let v = next()?;
        buf.push_back(v);
        sum += v;
    }
    let mut best = sum;
    let mut argmax = 0;
    for j in 1..=n - ell {
        let v = next()?;
        let old = buf.pop_front().unwrap();
        buf.push_back(v);
        sum += v - old;
        if j % RESUM_EVERY == 0 {
            sum = buf.iter().sum();
        }
        if sum > best {
            best = sum;
            argmax = j;
        }
    }
    Ok(WindowStat { n, ell, w: best / ell as f64, argmax })
}

/// Erdős–Rényi window statistic of one sample path of `channel`.
pub fn erdos_renyi_windows(
    channel: &Channel,
    obs: &Observable,
    seed: u64,
    index: u64,
    n: u64,
    i_alpha: f64,
) -> Result<WindowStat> {
    if !(i_alpha > 0.0) {
        return Err(LdError::Invalid("I(alpha) must be positive".into()));
    }
    let ell = er_window_length(n, i_alpha);
    if ell < 1 {
        return Err(LdError::Invalid(format!("window length ln(n)/I < 1 at n = {n}")));
    }
    if ell > n {
        return Err(LdError::Invalid(format!("window length {ell} exceeds n = {n}")));
    }
    let mut path = PathValues::new(channel, obs, seed, index);
    max_window_average(|| path.next_value(), n, ell)
}

/// `I(a) = a - 1 - ln a`, the Cramér rate function of Exp(1).
pub fn exponential_rate(a: f64) -> f64 {
    a - 1.0 - a.ln()
}
