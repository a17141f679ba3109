//! Observable families unbounded at a point, their truncations and means.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::dynamics::{BitPoint, BitTape};
use crate::error::{LdError, Result};
use crate::quadrature::{integrate_split, Tolerance};

/// Absolute tolerance for quadrature means.
pub const MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservableKind {
    /// `(-ln |x - p|)^alpha`
    LogPow { alpha: f64, point: f64 },
    /// `x^(-alpha)`, `0 < alpha < 1`
    InvPow { alpha: f64 },
    /// `ln(1 - ln |x - p|)`
    LogLog { point: f64 },
    /// Constant on dyadic cells `[j 2^-d, (j+1) 2^-d)`.
    CylinderCoded { depth: u32, values: Vec<f64> },
}

impl ObservableKind {
    pub fn singular_point(&self) -> Option<f64> {
        match *self {
            ObservableKind::LogPow { point, .. } | ObservableKind::LogLog { point } => Some(point),
            ObservableKind::InvPow { .. } => Some(0.0),
            ObservableKind::CylinderCoded { .. } => None,
        }
    }

    /// Value as a function of `L = -ln d(x, p)`.
    #[inline]
    fn from_neg_log(&self, l: f64) -> f64 {
        match *self {
            ObservableKind::LogPow { alpha, .. } => {
                if alpha == 1.0 {
                    l
                } else if alpha == 2.0 {
                    l * l
                } else {
                    l.powf(alpha)
                }
            }
            ObservableKind::InvPow { alpha } => (alpha * l).exp(),
            ObservableKind::LogLog { .. } => l.ln_1p(),
            ObservableKind::CylinderCoded { .. } => unreachable!("cylinder values are tabulated"),
        }
    }

    /// Smallest `L` at which the raw value exceeds `level`.
    fn neg_log_above(&self, level: f64) -> f64 {
        match *self {
            ObservableKind::LogPow { alpha, .. } => level.max(0.0).powf(1.0 / alpha),
            ObservableKind::InvPow { alpha } => level.max(1.0).ln() / alpha,
            ObservableKind::LogLog { .. } => level.max(0.0).exp_m1(),
            ObservableKind::CylinderCoded { .. } => f64::INFINITY,
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableKind::LogPow { alpha, point } => write!(f, "logpow:{alpha}:{point}"),
            ObservableKind::InvPow { alpha } => write!(f, "invpow:{alpha}"),
            ObservableKind::LogLog { point } => write!(f, "loglog:{point}"),
            ObservableKind::CylinderCoded { depth, .. } => write!(f, "cylinder:{depth}"),
        }
    }
}

/// Parses `logpow:ALPHA:P`, `invpow:ALPHA`, `loglog:P` and
/// `cylinder:v0,v1,...` (table length a power of two).
impl FromStr for ObservableKind {
    type Err = LdError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| LdError::Invalid(format!("bad number '{t}' in observable '{s}'")))
        };
        let kind = match parts.as_slice() {
            ["logpow", a] => ObservableKind::LogPow { alpha: num(a)?, point: 0.0 },
            ["logpow", a, p] => ObservableKind::LogPow { alpha: num(a)?, point: num(p)? },
            ["invpow", a] => ObservableKind::InvPow { alpha: num(a)? },
            ["loglog"] => ObservableKind::LogLog { point: 0.0 },
            ["loglog", p] => ObservableKind::LogLog { point: num(p)? },
            ["cylinder", vals] => {
                let values = vals.split(',').map(num).collect::<Result<Vec<_>>>()?;
                if !values.len().is_power_of_two() {
                    return Err(LdError::Invalid("cylinder table length must be 2^d".into()));
                }
                ObservableKind::CylinderCoded {
                    depth: values.len().trailing_zeros(),
                    values,
                }
            }
            _ => return Err(LdError::Invalid(format!("unknown observable '{s}'"))),
        };
        validate(&kind)?;
        Ok(kind)
    }
}

fn validate(kind: &ObservableKind) -> Result<()> {
    match *kind {
        ObservableKind::LogPow { alpha, point } if alpha <= 0.0 || !(0.0..=1.0).contains(&point) => {
            Err(LdError::Invalid("logpow needs alpha > 0 and p in [0,1]".into()))
        }
        ObservableKind::LogLog { point } if !(0.0..=1.0).contains(&point) => {
            Err(LdError::Invalid("loglog needs p in [0,1]".into()))
        }
        ObservableKind::InvPow { alpha } if alpha <= 0.0 => {
            Err(LdError::Invalid("invpow needs alpha > 0".into()))
        }
        ObservableKind::CylinderCoded { depth, ref values } if values.len() != 1 << depth => {
            Err(LdError::Invalid("cylinder table must have 2^depth entries".into()))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TruncationSchedule {
    /// Zero on the ball of radius `exp(-n^beta)` around the singularity.
    RadiusCut { beta: f64, n: usize },
    /// `min(level, phi)`.
    LevelCut { level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    pub sup_norm: f64,
    pub bv_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Cut {
    Radius { neg_log_radius: f64 },
    Level { level: f64 },
}

/// An observable, optionally truncated and centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub kind: ObservableKind,
    cut: Option<Cut>,
    shift: f64,
}

impl Observable {
    pub fn new(kind: ObservableKind) -> Result<Self> {
        validate(&kind)?;
        Ok(Observable { kind, cut: None, shift: 0.0 })
    }

    pub fn log_pow(alpha: f64, point: f64) -> Self {
        Self::new(ObservableKind::LogPow { alpha, point }).expect("valid logpow")
    }

    pub fn inv_pow(alpha: f64) -> Self {
        Self::new(ObservableKind::InvPow { alpha }).expect("valid invpow")
    }

    pub fn log_log(point: f64) -> Self {
        Self::new(ObservableKind::LogLog { point }).expect("valid loglog")
    }

    pub fn cylinder(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() || values.len() > 1 << 16 {
            return Err(LdError::Invalid("cylinder table length must be 2^d, d <= 16".into()));
        }
        Self::new(ObservableKind::CylinderCoded {
            depth: values.len().trailing_zeros(),
            values,
        })
    }

    /// Subtract the mean so the observable integrates to zero.
    pub fn centered(mut self) -> Result<Self> {
        self.shift = 0.0;
        self.shift = self.mean()?;
        Ok(self)
    }

    pub fn is_centered(&self) -> bool {
        self.shift != 0.0
    }

    /// The constant subtracted by [`Observable::centered`].
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn singular_point(&self) -> Option<f64> {
        match self.cut {
            Some(_) => None,
            None => self.kind.singular_point(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.singular_point().is_none()
    }

    pub fn is_truncated(&self) -> bool {
        self.cut.is_some()
    }

    #[inline]
    fn from_neg_log(&self, l: f64) -> f64 {
        let raw = match self.cut {
            Some(Cut::Radius { neg_log_radius }) if l >= neg_log_radius => 0.0,
            Some(Cut::Level { level }) => {
                if l >= self.kind.neg_log_above(level) {
                    level
                } else {
                    self.kind.from_neg_log(l).min(level)
                }
            }
            _ => self.kind.from_neg_log(l),
        };
        raw - self.shift
    }

    /// Value at a point whose distance to the singular point is `e^{-l}`.
    #[inline]
    pub fn eval_neg_log(&self, l: f64) -> f64 {
        self.from_neg_log(l)
    }

    /// Pointwise value.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(LdError::Domain(format!("x = {x} outside [0,1]")));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Pointwise value without the domain check; returns `inf` at the
    /// singularity of an untruncated observable.
    #[inline]
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            ObservableKind::CylinderCoded { depth, values } => {
                let j = ((x * (1u64 << depth) as f64) as usize).min(values.len() - 1);
                values[j] - self.shift
            }
            k => {
                let p = k.singular_point().unwrap_or(0.0);
                let d = (x - p).abs();
                if d == 0.0 && self.cut.is_none() {
                    return f64::INFINITY;
                }
                self.from_neg_log(-d.ln())
            }
        }
    }

    /// Checked evaluation: errors exactly at the singularity.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        let v = self.eval(x)?;
        if v.is_infinite() {
            return Err(LdError::Singular { x });
        }
        Ok(v)
    }

    /// Value at a symbolic orbit point. Points at 0 and 1 are resolved to
    /// any depth; other singular points use the 128-bit window.
    #[inline]
    pub fn eval_point(&self, tape: &mut BitTape, pt: BitPoint) -> Result<f64> {
        match &self.kind {
            ObservableKind::CylinderCoded { depth, values } => {
                Ok(values[pt.cylinder(tape, *depth)] - self.shift)
            }
            k => {
                let p = k.singular_point().unwrap_or(0.0);
                let l = if p == 0.0 {
                    pt.neg_ln(tape)
                } else if p == 1.0 {
                    pt.reflect().neg_ln(tape)
                } else {
                    let x = pt.window128(tape);
                    let pf = (p * 2f64.powi(128)) as u128;
                    let d = x.abs_diff(pf);
                    if d == 0 {
                        return Err(LdError::Singular { x: p });
                    }
                    -(d as f64 * 2f64.powi(-128)).ln()
                };
                Ok(self.from_neg_log(l))
            }
        }
    }

    /// `∫_0^1 phi dx`: closed form where available, quadrature otherwise.
    pub fn mean(&self) -> Result<f64> {
        let raw = match (&self.kind, self.cut) {
            (ObservableKind::CylinderCoded { values, .. }, _) => {
                values.iter().sum::<f64>() / values.len() as f64
            }
            (&ObservableKind::LogPow { alpha, point }, None) => log_pow_mean(alpha, point),
            (&ObservableKind::InvPow { alpha }, None) => {
                if alpha >= 1.0 {
                    return Err(LdError::NotIntegrable(format!("x^-{alpha}")));
                }
                1.0 / (1.0 - alpha)
            }
            _ => self.mean_by_quadrature()?,
        };
        Ok(raw - self.shift)
    }

    /// Quadrature mean regardless of closed forms (uncentered).
    pub fn mean_by_quadrature(&self) -> Result<f64> {
        if let ObservableKind::InvPow { alpha } = self.kind {
            if alpha >= 1.0 && !matches!(self.cut, Some(_)) {
                return Err(LdError::NotIntegrable(format!("x^-{alpha}")));
            }
        }
        let p = match self.kind.singular_point() {
            Some(p) => p,
            None => return self.mean(),
        };
        let tol = Tolerance { abs: MEAN_TOL * 1e-3, rel: 1e-13 };
        let raw = |x: f64| self.eval_unchecked(x) + self.shift;
        let q = match self.cut {
            Some(Cut::Radius { neg_log_radius }) => {
                let r = (-neg_log_radius).exp();
                integrate_split(raw, 0.0, 1.0, &[p - r, p + r], &[], tol)
            }
            Some(Cut::Level { level }) => {
                let r = (-self.kind.neg_log_above(level)).exp();
                integrate_split(raw, 0.0, 1.0, &[p - r, p + r], &[], tol)
            }
            None => integrate_split(raw, 0.0, 1.0, &[], &[p], tol),
        };
        Ok(q.value)
    }

    /// Apply a truncation schedule. The result is bounded.
    pub fn truncate(&self, sched: TruncationSchedule) -> Result<(Observable, TruncationReport)> {
        if matches!(self.kind, ObservableKind::CylinderCoded { .. }) {
            return Err(LdError::Invalid("cylinder observables are already bounded".into()));
        }
        let (cut, sup) = match sched {
            TruncationSchedule::RadiusCut { beta, n } => {
                if !(0.0 < beta && beta < 1.0) {
                    return Err(LdError::Invalid("beta must lie in (0,1)".into()));
                }
                let l = (n as f64).powf(beta);
                (Cut::Radius { neg_log_radius: l }, self.kind.from_neg_log(l))
            }
            TruncationSchedule::LevelCut { level } => {
                if level <= 0.0 {
                    return Err(LdError::Invalid("level must be positive".into()));
                }
                (Cut::Level { level }, level)
            }
        };
        let t = Observable {
            kind: self.kind.clone(),
            cut: Some(cut),
            shift: 0.0,
        };
        let t = if self.is_centered() { t.centered()? } else { t };
        Ok((t, TruncationReport { sup_norm: sup, bv_bound: 3.0 * sup }))
    }

    /// Radius `r` with `phi > level` whenever `d(x, p) < r`.
    pub fn radius_above(&self, level: f64) -> Option<f64> {
        if self.cut.is_some() {
            return None;
        }
        self.kind.singular_point()?;
        Some((-self.kind.neg_log_above(level + self.shift)).exp())
    }

    /// Lower bound of the observable on `[0,1]`.
    pub fn lower_bound(&self) -> f64 {
        match &self.kind {
            ObservableKind::CylinderCoded { values, .. } => {
                values.iter().copied().fold(f64::INFINITY, f64::min) - self.shift
            }
            ObservableKind::InvPow { .. } => 1.0 - self.shift,
            _ => -self.shift,
        }
    }

    /// Midpoint sampling on depth-`d` dyadic cells.
    pub fn to_cylinder(&self, depth: u32) -> Result<Observable> {
        if depth > 16 {
            return Err(LdError::Invalid("cylinder depth must be <= 16".into()));
        }
        let m = 1usize << depth;
        let values = (0..m)
            .map(|j| self.eval_unchecked((j as f64 + 0.5) / m as f64) + self.shift)
            .collect();
        Observable::cylinder(values)
    }
}

/// `∫_0^1 (-ln|x-p|)^α dx` via incomplete gamma functions.
fn log_pow_mean(alpha: f64, p: f64) -> f64 {
    let side = |a: f64| {
        if a <= 0.0 {
            0.0
        } else if a >= 1.0 {
            gamma(alpha + 1.0)
        } else {
            gamma(alpha + 1.0) * gamma_ur(alpha + 1.0, -a.ln())
        }
    };
    side(p) + side(1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        let e3 = (-3.0f64).exp();
        assert!((Observable::log_pow(1.0, 0.0).eval(e3).unwrap() - 3.0).abs() < 1e-14);
        assert!((Observable::log_pow(2.0, 0.0).eval(e3).unwrap() - 9.0).abs() < 1e-13);
        assert!((Observable::inv_pow(0.5).eval(0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singularity_is_an_error() {
        assert!(matches!(
            Observable::log_pow(1.0, 0.0).eval_checked(0.0),
            Err(LdError::Singular { .. })
        ));
        assert!(Observable::log_log(0.0).eval_checked(0.0).is_err());
    }

    #[test]
    fn closed_form_means() {
        assert!((Observable::log_pow(1.0, 0.0).mean().unwrap() - 1.0).abs() < 1e-14);
        assert!((Observable::log_pow(2.0, 0.0).mean().unwrap() - 2.0).abs() < 1e-13);
        assert!((Observable::inv_pow(0.5).mean().unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(
            Observable::inv_pow(1.0).mean(),
            Err(LdError::NotIntegrable(_))
        ));
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        for (a, p) in [(1.0, 0.0), (2.0, 0.0), (0.5, 0.0), (1.5, 0.3), (1.0, 1.0)] {
            let o = Observable::log_pow(a, p);
            let c = o.mean().unwrap();
            let q = o.mean_by_quadrature().unwrap();
            assert!((c - q).abs() < 1e-9, "alpha={a} p={p}: {c} vs {q}");
        }
        let o = Observable::inv_pow(0.5);
        assert!((o.mean_by_quadrature().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn log_log_mean_is_e_times_e1() {
        // ∫_0^∞ ln(1+u) e^{-u} du = e E1(1)
        let m = Observable::log_log(0.0).mean().unwrap();
        assert!((m - 0.596_347_362_323_194_1).abs() < 1e-10, "{m}");
    }

    #[test]
    fn centered_has_zero_mean() {
        let o = Observable::log_pow(1.0, 0.0).centered().unwrap();
        assert!(o.mean().unwrap().abs() < 1e-14);
        let e3 = (-3.0f64).exp();
        assert!((o.eval(e3).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn radius_cut_sup_and_mean_drift() {
        let phi = Observable::log_pow(1.0, 0.0);
        let (g, rep) = phi
            .truncate(TruncationSchedule::RadiusCut { beta: 0.5, n: 100 })
            .unwrap();
        assert!((rep.sup_norm - 10.0).abs() < 1e-12);
        assert!((rep.bv_bound - 30.0).abs() < 1e-12);
        assert_eq!(g.eval((-10.5f64).exp()).unwrap(), 0.0);
        assert!((g.eval((-9.0f64).exp()).unwrap() - 9.0).abs() < 1e-12);
        let drift = phi.mean().unwrap() - g.mean().unwrap();
        // ∫_0^{e^-10} -ln x dx = 11 e^{-10}
        assert!((drift - 11.0 * (-10.0f64).exp()).abs() < 1e-10, "{drift}");
        assert!(drift.abs() <= 1e-3);
    }

    #[test]
    fn level_cut() {
        let (h, rep) = Observable::log_pow(1.0, 0.0)
            .truncate(TruncationSchedule::LevelCut { level: 5.0 })
            .unwrap();
        assert_eq!(rep.sup_norm, 5.0);
        assert!((h.eval((-7.0f64).exp()).unwrap() - 5.0).abs() < 1e-14);
        assert!((h.eval((-3.0f64).exp()).unwrap() - 3.0).abs() < 1e-14);
        // E min(X, M) = 1 - e^{-M} for X ~ Exp(1)
        assert!((h.mean().unwrap() - (1.0 - (-5.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn parse_round_trip() {
        let k: ObservableKind = "logpow:2:0.25".parse().unwrap();
        assert_eq!(k, ObservableKind::LogPow { alpha: 2.0, point: 0.25 });
        assert_eq!(k.to_string(), "logpow:2:0.25");
        assert!("logpow:-1".parse::<ObservableKind>().is_err());
        let c: ObservableKind = "cylinder:1,-1".parse().unwrap();
        assert!(matches!(c, ObservableKind::CylinderCoded { depth: 1, .. }));
    }

    #[test]
    fn tape_and_float_evaluation_agree() {
        let obs = [
            Observable::log_pow(1.5, 0.0),
            Observable::log_log(0.0),
            Observable::log_pow(1.0, 1.0),
            Observable::log_pow(1.0, 0.3),
        ];
        for o in &obs {
            for i in 0..50 {
                let mut t = BitTape::random(4, i);
                let pt = BitPoint { offset: 3, complement: i % 2 == 1 };
                let x = pt.to_f64(&mut t);
                let a = o.eval_point(&mut t, pt).unwrap();
                let b = o.eval(x).unwrap();
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{:?}: {a} vs {b}", o.kind);
            }
        }
    }

    #[test]
    fn radius_above_inverts() {
        let o = Observable::log_log(0.0).centered().unwrap();
        let r = o.radius_above(1.2).unwrap();
        assert!(o.eval(r * 0.999).unwrap() > 1.2);
        assert!(o.eval(r * 1.001).unwrap() < 1.2);
    }
}
