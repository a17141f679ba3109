//! The Bryc–Smolenski tower truncated at column `K`: exact distributions of
//! `S_n(f)` for the coboundary `f = ψ∘F - ψ` and its log-MGF.
//!
//! Column `k ≥ 1` has height `R(k) = 2·12^k` and base mass `C e^{-12^k/2}`;
//! column 0 has height 1 and base mass `C e^{-1/4}`. Masses are kept as
//! logarithms since `p_3 = C e^{-864}` is below the `f64` range.

use serde::Serialize;

use crate::error::{LdError, Result};
use crate::rng::CounterRng;

pub const MAX_COLUMNS: u32 = 4;
/// Largest `K` for the (state, value) distribution DP.
pub const MAX_DIST_COLUMNS: u32 = 2;
pub const MAX_DIST_STEPS: u64 = 300;
pub const MAX_MGF_STEPS: u64 = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct TowerModel {
    pub k_max: u32,
    /// `n(k)`: 1/2 for column 0, `12^k` otherwise.
    pub n_of: Vec<f64>,
    pub heights: Vec<usize>,
    /// `ln C` with `C^{-1} = Σ_{k≤K} e^{-n(k)/2}`.
    pub log_c: f64,
    /// `ln p_k`.
    pub log_p: Vec<f64>,
    /// `ln Z`, `Z = Σ_k R(k) p_k`.
    pub log_z: f64,
    /// `log10 Σ_{k>K} R(k) e^{-n(k)/2}`, the discarded tail.
    pub tail_log10: f64,
    offsets: Vec<usize>,
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl TowerModel {
    pub fn build(k_max: u32) -> Result<Self> {
        if !(1..=MAX_COLUMNS).contains(&k_max) {
            return Err(LdError::Invalid(format!(
                "K = {k_max} outside 1..={MAX_COLUMNS} (R(4) = 41472 levels already)"
            )));
        }
        let n_of: Vec<f64> = (0..=k_max)
            .map(|k| if k == 0 { 0.5 } else { 12f64.powi(k as i32) })
            .collect();
        let heights: Vec<usize> = n_of
            .iter()
            .enumerate()
            .map(|(k, &n)| if k == 0 { 1 } else { 2 * n as usize })
            .collect();
        let log_c = -log_sum_exp(n_of.iter().map(|n| -n / 2.0));
        let log_p: Vec<f64> = n_of.iter().map(|n| log_c - n / 2.0).collect();
        let log_z = log_sum_exp(
            heights.iter().zip(&log_p).map(|(&r, &lp)| (r as f64).ln() + lp),
        );
        let tail = log_sum_exp((k_max + 1..k_max + 4).map(|k| {
            let n = 12f64.powi(k as i32);
            (2.0 * n).ln() - n / 2.0
        }));
        let mut offsets = vec![0];
        for &r in &heights {
            offsets.push(offsets.last().unwrap() + r);
        }
        Ok(TowerModel {
            k_max,
            n_of,
            heights,
            log_c,
            log_p,
            log_z,
            tail_log10: tail / std::f64::consts::LN_10,
            offsets,
        })
    }

    pub fn columns(&self) -> usize {
        self.heights.len()
    }

    pub fn state_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn index(&self, k: usize, j: usize) -> usize {
        self.offsets[k] + j
    }

    pub fn c(&self) -> f64 {
        self.log_c.exp()
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// `f(k, j)`: +1 on the lower half of column `k ≥ 1`, -1 on the upper half.
    pub fn f(&self, k: usize, j: usize) -> i64 {
        if k == 0 {
            0
        } else if (j as f64) < self.n_of[k] {
            1
        } else {
            -1
        }
    }

    /// `ψ(k, j)`: the tent `j` / `2n(k) - j` on column `k ≥ 1`.
    pub fn psi(&self, k: usize, j: usize) -> i64 {
        if k == 0 {
            return 0;
        }
        let n = self.n_of[k] as i64;
        let j = j as i64;
        if j <= n {
            j
        } else {
            2 * n - j
        }
    }

    /// `ln ν(k, j) = ln p_k - ln Z`.
    pub fn log_nu(&self, k: usize) -> f64 {
        self.log_p[k] - self.log_z
    }

    fn is_top(&self, k: usize, j: usize) -> bool {
        j + 1 == self.heights[k]
    }

    /// `max |ν·Kernel - ν|` over all states.
    pub fn stationarity_residual(&self) -> f64 {
        let nu: Vec<f64> = (0..self.columns()).map(|k| self.log_nu(k).exp()).collect();
        let p: Vec<f64> = self.log_p.iter().map(|l| l.exp()).collect();
        let top_mass: f64 = nu.iter().sum();
        let mut worst = 0.0f64;
        for k in 0..self.columns() {
            // level 0 receives every top's mass split by p; level j>0 its predecessor.
            worst = worst.max((top_mass * p[k] - nu[k]).abs());
        }
        let total: f64 = (0..self.columns()).map(|k| self.heights[k] as f64 * nu[k]).sum();
        worst.max((total - 1.0).abs())
    }

    /// Exact log-MGF curve `n ↦ (1/n) ln E_ν e^{t S_n}` for `n = 1..=n_max`.
    pub fn log_mgf_curve(&self, t: f64, n_max: u64) -> Result<MgfCurve> {
        if n_max == 0 || n_max > MAX_MGF_STEPS {
            return Err(LdError::Invalid(format!("n_max must lie in 1..={MAX_MGF_STEPS}")));
        }
        let s = self.state_count();
        // g[s] = ln E[e^{t S_n} | start s], built backward in n.
        let mut g = vec![0.0f64; s];
        let mut next = vec![0.0f64; s];
        let mut points = Vec::with_capacity(n_max as usize);
        for n in 1..=n_max {
            let back = log_sum_exp((0..self.columns()).map(|k| self.log_p[k] + g[self.index(k, 0)]));
            for k in 0..self.columns() {
                for j in 0..self.heights[k] {
                    let i = self.index(k, j);
                    let tail = if self.is_top(k, j) { back } else { g[i + 1] };
                    next[i] = t * self.f(k, j) as f64 + tail;
                }
            }
            std::mem::swap(&mut g, &mut next);
            let e = log_sum_exp((0..self.columns()).flat_map(|k| {
                let lnu = self.log_nu(k);
                let g = &g;
                (0..self.heights[k]).map(move |j| lnu + g[self.offsets[k] + j])
            }));
            points.push((n, e / n as f64));
        }
        Ok(MgfCurve { t, k_max: self.k_max, points })
    }

    fn check_dist(&self, n: u64) -> Result<()> {
        if self.k_max > MAX_DIST_COLUMNS || n > MAX_DIST_STEPS {
            return Err(LdError::Cost(format!(
                "distribution DP limited to K <= {MAX_DIST_COLUMNS}, n <= {MAX_DIST_STEPS}"
            )));
        }
        Ok(())
    }

    /// Runs the forward (state, value) DP for `n_max` steps and hands the
    /// pmf of `S_t` on `[-t, t]` (index `v + t`) to `visit` for each `t`.
    fn forward(&self, n_max: u64, mut visit: impl FnMut(u64, &[f64])) -> Result<()> {
        self.check_dist(n_max)?;
        let s = self.state_count();
        let w = 2 * n_max as usize + 1;
        let mid = n_max as usize;
        let p: Vec<f64> = self.log_p.iter().map(|l| l.exp()).collect();
        let mut mass = vec![0.0f64; s * w];
        for k in 0..self.columns() {
            let nu = self.log_nu(k).exp();
            for j in 0..self.heights[k] {
                mass[self.index(k, j) * w + mid] = nu;
            }
        }
        let mut next = vec![0.0f64; s * w];
        let mut ret = vec![0.0f64; w];
        let mut pmf = vec![0.0f64; w];
        for t in 1..=n_max as usize {
            next.iter_mut().for_each(|x| *x = 0.0);
            ret.iter_mut().for_each(|x| *x = 0.0);
            let (lo, hi) = (mid + 1 - t, mid + t - 1);
            for k in 0..self.columns() {
                for j in 0..self.heights[k] {
                    let i = self.index(k, j);
                    let f = self.f(k, j);
                    let src = &mass[i * w..(i + 1) * w];
                    let dst: &mut [f64] = if self.is_top(k, j) {
                        &mut ret
                    } else {
                        &mut next[(i + 1) * w..(i + 2) * w]
                    };
                    for v in lo..=hi {
                        dst[(v as i64 + f) as usize] += src[v];
                    }
                }
            }
            for k in 0..self.columns() {
                let i = self.index(k, 0);
                for (d, r) in next[i * w..(i + 1) * w].iter_mut().zip(&ret) {
                    *d += p[k] * r;
                }
            }
            std::mem::swap(&mut mass, &mut next);
            pmf.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..s {
                for (acc, m) in pmf.iter_mut().zip(&mass[i * w..(i + 1) * w]) {
                    *acc += m;
                }
            }
            visit(t as u64, &pmf[mid - t..=mid + t]);
        }
        Ok(())
    }

    /// Exact pmf of `S_n(f)` under `ν` on `[-n, n]` (index `v + n`).
    pub fn sn_distribution(&self, n: u64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.forward(n, |t, pmf| {
            if t == n {
                out = pmf.to_vec();
            }
        })?;
        Ok(out)
    }

    /// `(n, E S_n, Var S_n)` for `n = 1..=n_max`.
    pub fn variance_curve(&self, n_max: u64) -> Result<Vec<(u64, f64, f64)>> {
        let mut out = Vec::new();
        self.forward(n_max, |t, pmf| {
            let t0 = t as f64;
            let (mut m1, mut m2) = (0.0, 0.0);
            for (i, p) in pmf.iter().enumerate() {
                let v = i as f64 - t0;
                m1 += p * v;
                m2 += p * v * v;
            }
            out.push((t, m1, m2 - m1 * m1));
        })?;
        Ok(out)
    }

    /// `E_ν ψ²`.
    pub fn psi_second_moment(&self) -> f64 {
        (0..self.columns())
            .map(|k| {
                let nu = self.log_nu(k).exp();
                (0..self.heights[k]).map(|j| (self.psi(k, j) as f64).powi(2)).sum::<f64>() * nu
            })
            .sum()
    }

    /// Exhaustive check of `f = ψ∘F - ψ` over every state and return
    /// column, then the telescoped identity on random trajectories.
    pub fn verify_coboundary(&self, trajectories: usize, length: usize, seed: u64) -> CoboundaryReport {
        let mut checked = 0;
        let mut violations = 0;
        for k in 0..self.columns() {
            for j in 0..self.heights[k] {
                let dests: Vec<(usize, usize)> = if self.is_top(k, j) {
                    (0..self.columns()).map(|kk| (kk, 0)).collect()
                } else {
                    vec![(k, j + 1)]
                };
                for (kk, jj) in dests {
                    checked += 1;
                    if self.f(k, j) != self.psi(kk, jj) - self.psi(k, j) {
                        violations += 1;
                    }
                }
            }
        }
        let p: Vec<f64> = self.log_p.iter().map(|l| l.exp()).collect();
        let col_weights: Vec<f64> = (0..self.columns())
            .map(|k| self.log_nu(k).exp() * self.heights[k] as f64)
            .collect();
        let pick = |u: f64, w: &[f64]| {
            let total: f64 = w.iter().sum();
            let mut acc = 0.0;
            for (i, x) in w.iter().enumerate() {
                acc += x / total;
                if u < acc {
                    return i;
                }
            }
            w.len() - 1
        };
        let mut trajectory_failures = 0;
        for i in 0..trajectories {
            let mut rng = CounterRng::new(seed, i as u64).cursor();
            let mut k = pick(rng.open01(), &col_weights);
            let mut j = rng.below(self.heights[k] as u64) as usize;
            let start = self.psi(k, j);
            let mut s = 0i64;
            for _ in 0..length {
                s += self.f(k, j);
                if self.is_top(k, j) {
                    k = pick(rng.open01(), &p);
                    j = 0;
                } else {
                    j += 1;
                }
            }
            if s != self.psi(k, j) - start {
                trajectory_failures += 1;
            }
        }
        CoboundaryReport {
            states: self.state_count(),
            transitions_checked: checked,
            violations,
            trajectories,
            trajectory_failures,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoboundaryReport {
    pub states: usize,
    pub transitions_checked: usize,
    pub violations: usize,
    pub trajectories: usize,
    pub trajectory_failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MgfCurve {
    pub t: f64,
    pub k_max: u32,
    pub points: Vec<(u64, f64)>,
}

impl MgfCurve {
    pub fn value(&self, n: u64) -> Option<f64> {
        self.points.get(n.checked_sub(1)? as usize).map(|p| p.1)
    }

    /// `(max, min)` of the curve over `lo < n ≤ hi`.
    pub fn range(&self, lo: u64, hi: u64) -> (f64, f64) {
        self.points
            .iter()
            .filter(|p| p.0 > lo && p.0 <= hi)
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(a, b), p| (a.max(p.1), b.min(p.1)))
    }

    /// Running proxies over the second half of the curve: `(limsup, liminf)`.
    pub fn tail_proxies(&self) -> (f64, f64) {
        let n = self.points.len() as u64;
        self.range(n / 2, n)
    }
}

/// `ν(|S_n| > a·n)` from an exact pmf on `[-n, n]`.
pub fn deviation_mass(pmf: &[f64], n: u64, a: f64) -> f64 {
    pmf.iter()
        .enumerate()
        .filter(|(i, _)| ((*i as f64) - n as f64).abs() > a * n as f64)
        .map(|(_, p)| p)
        .sum()
}
