//! Failure mechanism of the upper Erdős–Rényi law for observables unbounded
//! at a periodic point: a close return at time `n` pins the orbit near `p`
//! for `≈ γ ln n / (2 ln K)` steps, forcing a large window average.

use serde::Serialize;

use super::windows::er_window_length;
use crate::dynamics::{hit_times, MapSpec, OrbitStream};
use crate::error::{LdError, Result};
use crate::observables::Observable;

/// Amount by which the level `M` exceeds the critical value.
pub const LEVEL_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exceedance {
    pub n: u64,
    /// `⌈γ ln n / (2 ln K)⌉`, the window pinned near `p`.
    pub short_len: u64,
    pub short_avg: f64,
    /// `⌊ln n / I⌋`, the Erdős–Rényi window.
    pub er_len: u64,
    pub er_avg: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub gamma: f64,
    pub alpha: f64,
    pub i_alpha: f64,
    pub k: f64,
    pub rho: f64,
    /// Critical level `(α+ρ)/I · 2 ln K / γ`.
    pub m_critical: f64,
    pub m_level: f64,
    /// Hits with `n > n0` are guaranteed to see `φ > M` on `B_{n^{-γ/2}}(p)`.
    pub n0: u64,
    pub n_max: u64,
    pub hits: Vec<u64>,
    pub exceedances: Vec<Exceedance>,
    pub inconclusive: bool,
}

impl ObstructionReport {
    pub fn verified_count(&self) -> usize {
        self.exceedances.iter().filter(|e| e.verified).count()
    }
}

/// `(M_critical, M, N0)` for the given parameters.
pub fn obstruction_threshold(
    obs: &Observable,
    gamma: f64,
    alpha: f64,
    i_alpha: f64,
    k: f64,
) -> Result<(f64, f64, u64)> {
    let rho = (-obs.lower_bound()).max(0.0);
    let m_crit = (alpha + rho) / i_alpha * 2.0 * k.ln() / gamma;
    let m = m_crit + LEVEL_MARGIN;
    let r = obs
        .radius_above(m)
        .ok_or_else(|| LdError::Invalid("observable must be unbounded at p".into()))?;
    let n0 = r.powf(-2.0 / gamma).ceil();
    if !n0.is_finite() || n0 > u64::MAX as f64 {
        return Err(LdError::Cost(format!("threshold N0 = {n0:e} is out of reach")));
    }
    Ok((m_crit, m, n0 as u64))
}

/// `Σ_{n=from}^{to} μ(B_{n^{-γ}}(p))` under Lebesgue on `[0,1]`.
pub fn expected_hits(p: f64, gamma: f64, from: u64, to: u64) -> f64 {
    (from.max(1)..=to)
        .map(|n| {
            let r = (n as f64).powf(-gamma);
            ((p + r).min(1.0) - (p - r).max(0.0)).max(0.0)
        })
        .sum()
}

pub fn obstruction_check(
    stream: &mut OrbitStream,
    map: &MapSpec,
    obs: &Observable,
    gamma: f64,
    alpha: f64,
    i_alpha: f64,
    n_max: u64,
) -> Result<ObstructionReport> {
    if !(i_alpha > 0.0 && gamma > 0.0) {
        return Err(LdError::Invalid("gamma and I(alpha) must be positive".into()));
    }
    if obs.singular_point() != Some(map.periodic_point) {
        return Err(LdError::Invalid(
            "observable must be unbounded at the map's periodic point".into(),
        ));
    }
    let k = map.deriv_bound;
    let rho = (-obs.lower_bound()).max(0.0);
    let (m_critical, m_level, n0) = obstruction_threshold(obs, gamma, alpha, i_alpha, k)?;
    let hits = hit_times(stream, map, gamma, n_max)?;
    let mut exceedances = Vec::new();
    for &n in hits.iter().filter(|&&n| n > n0) {
        let short_len = (gamma * (n as f64).ln() / (2.0 * k.ln())).ceil() as u64;
        let er_len = er_window_length(n, i_alpha);
        let mut short = 0.0;
        let mut er = 0.0;
        for j in 0..short_len.max(er_len) {
            let pt = stream.point(&map.kind, n + j);
            let v = obs.eval_point(stream.tape_mut(), pt)?;
            if j < short_len {
                short += v;
            }
            if j < er_len {
                er += v;
            }
        }
        let short_avg = short / short_len.max(1) as f64;
        let er_avg = er / er_len.max(1) as f64;
        exceedances.push(Exceedance {
            n,
            short_len,
            short_avg,
            er_len,
            er_avg,
            verified: short_len > 0 && er_len > 0 && short_avg > alpha && er_avg > alpha,
        });
    }
    Ok(ObstructionReport {
        gamma,
        alpha,
        i_alpha,
        k,
        rho,
        m_critical,
        m_level,
        n0,
        n_max,
        inconclusive: exceedances.is_empty(),
        hits,
        exceedances,
    })
}
