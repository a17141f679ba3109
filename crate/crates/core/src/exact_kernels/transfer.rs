//! Exact iterates of the doubling-map transfer operator,
//! `(P^n f)(x) = 2^-n Σ_{k<2^n} f((x+k)/2^n)`, and the decay measurements
//! built on them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LdError, Result};
use crate::observables::{Observable, ObservableKind};
use crate::quadrature::{integrate_split, Tolerance};

/// Largest `n` for which `P^n` is evaluated by its `2^n`-node sum.
pub const MAX_TRANSFER_DEPTH: u32 = 26;
/// Largest `n` on decay curves (each point costs a quadrature of `P^n`).
pub const MAX_CURVE_DEPTH: u32 = 20;

const JITTER: f64 = 1.0 / (1u64 << 60) as f64;

/// Deterministic pairwise sum of `term(k)` for `k` in `lo..hi`.
pub(crate) fn pairwise_sum<F: Fn(u64) -> f64>(term: &F, lo: u64, hi: u64) -> f64 {
    if hi - lo <= 128 {
        let mut s = 0.0;
        for k in lo..hi {
            s += term(k);
        }
        s
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(term, lo, mid) + pairwise_sum(term, mid, hi)
    }
}

/// `(P^n f)(x)` for the doubling map.
///
/// A node that lands exactly on a singularity of `f` is re-evaluated with
/// `x` shifted by `2^-60`.
pub fn apply_transfer<F: Fn(f64) -> f64>(f: &F, n: u32, x: f64) -> Result<f64> {
    if n > MAX_TRANSFER_DEPTH {
        return Err(LdError::Cost(format!(
            "P^{n} needs 2^{n} evaluations per point (limit n <= {MAX_TRANSFER_DEPTH})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(LdError::Domain(format!("x = {x} outside [0,1)")));
    }
    Ok(transfer_unchecked(f, n, x))
}

#[inline]
pub(crate) fn transfer_unchecked<F: Fn(f64) -> f64>(f: &F, n: u32, x: f64) -> f64 {
    let scale = 1.0 / (1u64 << n) as f64;
    let term = |k: u64| {
        let v = f((x + k as f64) * scale);
        if v.is_finite() {
            v
        } else {
            f((x + JITTER + k as f64) * scale)
        }
    };
    pairwise_sum(&term, 0, 1u64 << n) * scale
}

/// Singular points of `P^n φ` for an observable singular at `p`:
/// `p` itself and its forward image `T^n p`.
fn transfer_singularities(obs: &Observable, n: u32) -> Vec<f64> {
    match obs.singular_point() {
        None => vec![],
        Some(p) => {
            let mut img = p;
            for _ in 0..n {
                img = if img < 0.5 { 2.0 * img } else { 2.0 * img - 1.0 };
            }
            let mut v = vec![p, img];
            if p == 1.0 || img == 1.0 {
                v.push(0.0);
            }
            v
        }
    }
}

fn check_depth(n: u32) -> Result<()> {
    if n > MAX_CURVE_DEPTH {
        return Err(LdError::Cost(format!("n = {n} exceeds curve limit {MAX_CURVE_DEPTH}")));
    }
    Ok(())
}

/// Grid size of the sup-norm proxy used for `p = ∞`.
pub const SUP_GRID: usize = 10_000;

/// `max_i |(P^n f)(i/m)|` over a uniform grid.
pub fn transfer_sup_norm<F: Fn(f64) -> f64 + Sync>(f: &F, n: u32, m: usize) -> Result<f64> {
    if n > MAX_TRANSFER_DEPTH {
        return apply_transfer(f, n, 0.0);
    }
    Ok((0..m)
        .into_par_iter()
        .map(|i| transfer_unchecked(f, n, i as f64 / m as f64).abs())
        .reduce(|| 0.0, f64::max))
}

/// `‖P^n(φ - φ̄)‖_p`; `p = ∞` uses the sup over a `SUP_GRID` grid.
pub fn transfer_lp_norm(obs: &Observable, n: u32, p: f64, rel_tol: f64) -> Result<f64> {
    check_depth(n)?;
    if !(p >= 1.0) {
        return Err(LdError::Invalid(format!("p = {p} must be >= 1")));
    }
    if let ObservableKind::InvPow { alpha } = obs.kind {
        if !obs.is_truncated() && alpha * p >= 1.0 {
            return Err(LdError::NotIntegrable(format!(
                "x^-{alpha} is not in L^{p} (needs p < 1/alpha)"
            )));
        }
    }
    let mean = obs.mean()?;
    let f = |x: f64| obs.eval_unchecked(x) - mean;
    if p.is_infinite() {
        return transfer_sup_norm(&f, n, SUP_GRID);
    }
    let sing = transfer_singularities(obs, n);
    let q = integrate_split(
        |x| transfer_unchecked(&f, n, x).abs().powf(p),
        0.0,
        1.0,
        &[],
        &sing,
        Tolerance { abs: 1e-300, rel: rel_tol * p },
    );
    Ok(q.value.powf(1.0 / p))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCurve {
    pub label: String,
    pub points: Vec<(u32, f64)>,
    /// Least-squares slope of `ln |value|` against `n` over the fitted range.
    pub log_slope: f64,
    pub fit_from: u32,
}

impl DecayCurve {
    fn new(label: String, points: Vec<(u32, f64)>, fit_from: u32) -> Self {
        let fit: Vec<_> = points.iter().copied().filter(|(n, _)| *n >= fit_from).collect();
        let log_slope = if fit.len() >= 2 { fit_log_slope(&fit) } else { f64::NAN };
        DecayCurve { label, points, log_slope, fit_from }
    }

    pub fn value(&self, n: u32) -> Option<f64> {
        self.points.iter().find(|p| p.0 == n).map(|p| p.1)
    }
}

/// Least-squares slope of `ln |y|` against `n`.
pub fn fit_log_slope(points: &[(u32, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| *y != 0.0 && y.is_finite())
        .map(|&(n, y)| (n as f64, y.abs().ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `n ↦ ‖P^n(φ - φ̄)‖_p` for `n = 0..=n_max`, slope fitted over `n >= 1`.
pub fn lp_decay_curve(obs: &Observable, p: f64, n_max: u32) -> Result<DecayCurve> {
    check_depth(n_max)?;
    let points = (0..=n_max)
        .into_par_iter()
        .map(|n| transfer_lp_norm(obs, n, p, 1e-6).map(|v| (n, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayCurve::new(format!("{} L^{p}", obs.kind), points, 1))
}

/// Sup-norm proxy curve `n ↦ max_grid |P^n f|` for a bounded function.
pub fn sup_decay_curve<F: Fn(f64) -> f64 + Sync>(f: &F, n_max: u32, m: usize) -> Result<DecayCurve> {
    check_depth(n_max)?;
    let points = (0..=n_max)
        .map(|n| transfer_sup_norm(f, n, m).map(|v| (n, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayCurve::new("sup".into(), points, 1))
}

/// `∫ (f - f̄) · P^n(f - f̄) dx` for a function with known mean and singular points.
pub fn autocorrelation_fn<F: Fn(f64) -> f64 + Sync>(
    f: &F,
    mean: f64,
    n: u32,
    singular: &[f64],
) -> Result<f64> {
    check_depth(n)?;
    let c = |x: f64| f(x) - mean;
    let q = integrate_split(
        |x| c(x) * transfer_unchecked(&c, n, x),
        0.0,
        1.0,
        &[],
        singular,
        Tolerance { abs: 1e-300, rel: 1e-8 },
    );
    Ok(q.value)
}

/// `∫ φ · P^n(φ - φ̄) dx`, equal to `∫ (φ∘T^n - φ̄)(φ - φ̄) dx` by duality.
pub fn autocorrelation(obs: &Observable, n: u32) -> Result<f64> {
    let mean = obs.mean()?;
    let f = |x: f64| obs.eval_unchecked(x);
    autocorrelation_fn(&f, mean, n, &transfer_singularities(obs, n))
}

/// Autocorrelations for `n = 0..=n_max`, slope fitted over `n >= 2`.
pub fn autocorrelation_curve(obs: &Observable, n_max: u32) -> Result<DecayCurve> {
    check_depth(n_max)?;
    let points = (0..=n_max)
        .into_par_iter()
        .map(|n| autocorrelation(obs, n).map(|v| (n, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayCurve::new(format!("autocorrelation {}", obs.kind), points, 2))
}
