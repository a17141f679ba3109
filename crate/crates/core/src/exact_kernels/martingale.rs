//! Martingale–coboundary decomposition of a level-truncated observable,
//! `h - h̄ = g + w∘T - w` with `w = Σ_{k=1}^{C} P^k(h - h̄)`.

use rayon::prelude::*;
use serde::Serialize;

use super::transfer::{transfer_unchecked, MAX_TRANSFER_DEPTH};
use crate::error::{LdError, Result};
use crate::observables::{Observable, ObservableKind, TruncationSchedule};

/// Largest number of transfer terms kept in `w`.
pub const MAX_TERMS: u32 = 24;
const W_GRID_BITS: u32 = 12;
const RESIDUAL_GRID_BITS: u32 = 10;

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleParts {
    pub n: u64,
    pub alpha: f64,
    pub theta: f64,
    /// Truncation level `n^{(1-α)/4}`.
    pub m_n: f64,
    /// `M_n / θ` before rounding up.
    pub c_n_raw: f64,
    pub c_n: u32,
    pub h: Observable,
    pub h_mean: f64,
    /// Total variation of `h`.
    pub variation: f64,
    /// Bound on `Σ_{k>C} ‖P^k(h - h̄)‖_∞`.
    pub tail_bound: f64,
    /// Bound on `‖P g‖_∞ = ‖P^{C+1}(h - h̄)‖_∞`.
    pub residual_bound: f64,
    /// `max |w|` on the `2^12` grid.
    pub w_sup: f64,
    /// `max |P g|` on the `2^10` grid.
    pub residual: f64,
    /// `max |h - h̄ - (g + w∘T - w)|` on the `2^12` grid.
    pub telescoping_error: f64,
}

impl MartingaleParts {
    pub fn w(&self, x: f64) -> f64 {
        coboundary_w(&|y| self.h.eval_unchecked(y) - self.h_mean, self.c_n, x)
    }

    pub fn g(&self, x: f64) -> f64 {
        let hc = |y: f64| self.h.eval_unchecked(y) - self.h_mean;
        hc(x) - coboundary_w(&hc, self.c_n, doubling(x)) + coboundary_w(&hc, self.c_n, x)
    }

    /// `‖w‖_∞ ≤ C_n M_n + tail`.
    pub fn w_bound(&self) -> f64 {
        self.c_n as f64 * self.m_n + self.tail_bound
    }
}

#[inline]
fn doubling(x: f64) -> f64 {
    let y = 2.0 * x;
    if y >= 1.0 {
        y - 1.0
    } else {
        y
    }
}

fn coboundary_w<F: Fn(f64) -> f64>(hc: &F, c: u32, x: f64) -> f64 {
    (1..=c).map(|k| transfer_unchecked(hc, k, x)).sum()
}

/// Grid diagnostics of a candidate decomposition `h_c = g + w∘T - w` with
/// `g := h_c - w∘T + w`: returns `(max|w|, max|P g|, telescoping error)`.
pub fn coboundary_residual<H, W>(hc: &H, w: &W) -> (f64, f64, f64)
where
    H: Fn(f64) -> f64 + Sync,
    W: Fn(f64) -> f64 + Sync,
{
    let g = |x: f64| hc(x) - w(doubling(x)) + w(x);
    let m = 1usize << W_GRID_BITS;
    let (w_sup, tele) = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / m as f64;
            let wx = w(x);
            let wt = w(doubling(x));
            let gx = hc(x) - wt + wx;
            (wx.abs(), (hc(x) - (gx + wt - wx)).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let m = 1usize << RESIDUAL_GRID_BITS;
    let residual = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / m as f64;
            (0.5 * (g(0.5 * x) + g(0.5 * (x + 1.0)))).abs()
        })
        .reduce(|| 0.0, f64::max);
    (w_sup, residual, tele)
}

/// Total variation of a bounded observable that is monotone on each side of
/// its singular point (or piecewise constant).
fn total_variation(obs: &Observable) -> Result<f64> {
    match &obs.kind {
        ObservableKind::CylinderCoded { values, .. } => {
            Ok(values.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
        }
        kind => {
            if !obs.is_bounded() {
                return Err(LdError::Invalid("variation needs a bounded observable".into()));
            }
            let p = kind.singular_point().unwrap_or(0.0);
            let top = obs.eval_unchecked(p);
            Ok((top - obs.eval_unchecked(0.0)).abs() + (top - obs.eval_unchecked(1.0)).abs())
        }
    }
}

/// Decompose `h = min(φ, M_n)` with `M_n = n^{(1-α)/4}` and `C_n = ⌈M_n/θ⌉`.
///
/// The bounds use `‖P^k f‖_∞ ≤ e^{-θk} Var(f)` for mean-zero `f`, which holds
/// with `θ = ln 2` for the doubling map.
pub fn martingale_decompose(obs: &Observable, n: u64, alpha: f64, theta: f64) -> Result<MartingaleParts> {
    if !(alpha > 0.0 && alpha <= 0.2) {
        return Err(LdError::Invalid(format!("alpha = {alpha} must lie in (0, 1/5]")));
    }
    if !(theta > 0.0) {
        return Err(LdError::Invalid("theta must be positive".into()));
    }
    if n < 1 {
        return Err(LdError::Invalid("n must be >= 1".into()));
    }
    let m_n = (n as f64).powf((1.0 - alpha) / 4.0);
    let c_n_raw = m_n / theta;
    let c_n = c_n_raw.ceil() as u32;
    if c_n > MAX_TERMS || c_n + 1 > MAX_TRANSFER_DEPTH {
        return Err(LdError::Cost(format!(
            "C_n = {c_n} exceeds {MAX_TERMS} exact transfer terms; use a smaller n"
        )));
    }
    let base = Observable::new(obs.kind.clone())?;
    let h = if base.is_bounded() {
        base
    } else {
        base.truncate(TruncationSchedule::LevelCut { level: m_n })?.0
    };
    let h_mean = h.mean()?;
    let variation = total_variation(&h)?;
    let q = (-theta).exp();
    let residual_bound = variation * q.powi(c_n as i32 + 1);
    let tail_bound = residual_bound / (1.0 - q);

    let hc = |x: f64| h.eval_unchecked(x) - h_mean;
    let w = |x: f64| coboundary_w(&hc, c_n, x);
    let (w_sup, residual, telescoping_error) = coboundary_residual(&hc, &w);
    Ok(MartingaleParts {
        n,
        alpha,
        theta,
        m_n,
        c_n_raw,
        c_n,
        h,
        h_mean,
        variation,
        tail_bound,
        residual_bound,
        w_sup,
        residual,
        telescoping_error,
    })
}
