//! Stretched-exponent fit: slope of `ln(-ln p̂)` against `ln n`.

use serde::Serialize;

use super::tail::TailEstimate;
use crate::error::{LdError, Result};

pub const MIN_FIT_POINTS: usize = 4;
pub const MIN_FIT_SPAN: f64 = 8.0;

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub gamma_hat: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub points: Vec<(u64, f64)>,
}

/// Fit from tail estimates, keeping only reliable points with `0 < p̂ < 1`.
pub fn fit_exponent(estimates: &[TailEstimate]) -> Result<ExponentFit> {
    let pts: Vec<(u64, f64)> = estimates
        .iter()
        .filter(|e| !e.unreliable)
        .map(|e| (e.n, e.p_hat))
        .collect();
    fit_exponent_pairs(&pts)
}

/// Fit from raw `(n, p)` pairs.
pub fn fit_exponent_pairs(pairs: &[(u64, f64)]) -> Result<ExponentFit> {
    let mut pts: Vec<(u64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(n, p)| n > 0 && p > 0.0 && p < 1.0)
        .collect();
    pts.sort_by_key(|p| p.0);
    if pts.len() < MIN_FIT_POINTS {
        return Err(LdError::InsufficientData(format!(
            "{} usable points, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let (n_min, n_max) = (pts[0].0, pts[pts.len() - 1].0);
    if (n_max as f64) < MIN_FIT_SPAN * n_min as f64 {
        return Err(LdError::InsufficientData(format!(
            "n spans {n_min}..{n_max}, need a factor of {MIN_FIT_SPAN}"
        )));
    }
    let xy: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(n, p)| ((n as f64).ln(), (-p.ln()).ln()))
        .collect();
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (k - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        gamma_hat: slope,
        stderr,
        intercept,
        n_min,
        n_max,
        points: pts,
    })
}
