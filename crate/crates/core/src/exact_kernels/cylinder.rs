//! Exact law of Birkhoff sums of cylinder-coded observables under the
//! doubling map. The binary digits are i.i.d. fair bits, so `S_n` is an
//! additive functional of a Markov chain on the last `d-1` digits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LdError, Result};
use crate::observables::{Observable, ObservableKind};

/// Default cap on `states × buckets` per layer (two layers are live).
pub const DEFAULT_CELL_BUDGET: usize = 1 << 25;

/// Sandwich on the law of `S_n`. `down[b]` and `up[b]` are the pmfs of the
/// sums of values rounded down and up to the grid, both at value
/// `(base + b)·δ`.
#[derive(Debug, Clone, Serialize)]
pub struct SumDistribution {
    pub n: u32,
    pub delta: f64,
    pub depth: u32,
    pub base: i64,
    pub down: Vec<f64>,
    pub up: Vec<f64>,
}

impl SumDistribution {
    pub fn value(&self, b: usize) -> f64 {
        (self.base + b as i64) as f64 * self.delta
    }

    /// Bounds `(lo, hi)` on `P(S_n ≤ value(b))`.
    pub fn cdf_bounds(&self) -> Vec<(f64, f64)> {
        let mut lo = 0.0;
        let mut hi = 0.0;
        self.down
            .iter()
            .zip(&self.up)
            .map(|(d, u)| {
                lo += u;
                hi += d;
                (lo, hi)
            })
            .collect()
    }

    /// Bounds `(lo, hi)` on `P(S_n ≥ t)`.
    pub fn tail_ge(&self, t: f64) -> (f64, f64) {
        let first = ((t / self.delta).ceil() as i64 - self.base).max(0) as usize;
        let lo: f64 = self.down.iter().skip(first).sum();
        let hi: f64 = self.up.iter().skip(first).sum();
        (lo.min(1.0), hi.min(1.0))
    }

    /// Bounds `(lo, hi)` on `P(S_n ≤ t)`.
    pub fn tail_le(&self, t: f64) -> (f64, f64) {
        let last = (t / self.delta).floor() as i64 - self.base;
        if last < 0 {
            return (0.0, 0.0);
        }
        let k = (last as usize + 1).min(self.down.len());
        let lo: f64 = self.up[..k].iter().sum();
        let hi: f64 = self.down[..k].iter().sum();
        (lo.min(1.0), hi.min(1.0))
    }
}

fn pmf_of_bucketed(buckets: &[i64], depth: u32, n: u32, kmin: i64, width: usize) -> Vec<f64> {
    let states = 1usize << (depth - 1);
    let mask = states - 1;
    let span = buckets.iter().map(|k| (k - kmin) as usize).max().unwrap_or(0);
    // Predecessors of each state: (previous state, cylinder index).
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); states];
    for s in 0..states {
        for b in 0..2 {
            let idx = (s << 1) | b;
            preds[idx & mask].push((s, idx));
        }
    }
    let mut cur = vec![0.0f64; states * width];
    let init = 1.0 / states as f64;
    for s in 0..states {
        cur[s * width] = init;
    }
    let mut next = vec![0.0f64; states * width];
    for t in 0..n as usize {
        let active = t * span + 1;
        next.par_chunks_mut(width).enumerate().for_each(|(ns, row)| {
            row[..active + span].iter_mut().for_each(|v| *v = 0.0);
            for &(s, idx) in &preds[ns] {
                let shift = (buckets[idx] - kmin) as usize;
                let src = &cur[s * width..s * width + active];
                for (dst, &m) in row[shift..shift + active].iter_mut().zip(src) {
                    *dst += 0.5 * m;
                }
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
    let mut pmf = vec![0.0f64; width];
    for s in 0..states {
        for (acc, &m) in pmf.iter_mut().zip(&cur[s * width..(s + 1) * width]) {
            *acc += m;
        }
    }
    pmf
}

/// Two-sided exact law of `S_n(φ_d)` under Lebesgue measure.
pub fn cylinder_dp(obs: &Observable, n: u32, delta: f64) -> Result<SumDistribution> {
    cylinder_dp_with_budget(obs, n, delta, DEFAULT_CELL_BUDGET)
}

pub fn cylinder_dp_with_budget(
    obs: &Observable,
    n: u32,
    delta: f64,
    budget: usize,
) -> Result<SumDistribution> {
    let ObservableKind::CylinderCoded { depth, values } = &obs.kind else {
        return Err(LdError::Invalid("cylinder_dp needs a cylinder-coded observable".into()));
    };
    let depth = (*depth).max(1);
    if depth > 16 {
        return Err(LdError::Invalid("cylinder depth must be <= 16".into()));
    }
    if !(delta > 0.0) || n == 0 {
        return Err(LdError::Invalid("need delta > 0 and n >= 1".into()));
    }
    // A depth-0 table is the constant function; widen it to depth 1.
    let vals: Vec<f64> = if values.len() == 1 {
        vec![values[0]; 2]
    } else {
        values.clone()
    };
    let vals: Vec<f64> = vals.iter().map(|v| v - obs.shift()).collect();
    let down: Vec<i64> = vals.iter().map(|v| (v / delta).floor() as i64).collect();
    let up: Vec<i64> = vals.iter().map(|v| (v / delta).ceil() as i64).collect();
    let kmin = *down.iter().min().unwrap();
    let kmax = *up.iter().max().unwrap();
    let width = n as usize * (kmax - kmin) as usize + 1;
    let states = 1usize << (depth - 1);
    let cells = states.saturating_mul(width);
    if cells > budget {
        let range = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        let per_state = (budget / states) as f64 - 1.0 - 2.0 * n as f64;
        let min_delta = if per_state > 0.0 {
            n as f64 * range / per_state
        } else {
            f64::INFINITY
        };
        return Err(LdError::Budget { needed: cells as u64, budget: budget as u64, min_delta });
    }
    let pd = pmf_of_bucketed(&down, depth, n, kmin, width);
    let pu = pmf_of_bucketed(&up, depth, n, kmin, width);
    Ok(SumDistribution {
        n,
        delta,
        depth,
        base: n as i64 * kmin,
        down: pd,
        up: pu,
    })
}
