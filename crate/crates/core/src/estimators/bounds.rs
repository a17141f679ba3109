//! Closed-form concentration bounds and the pressure diagnostics.

use serde::Serialize;

use crate::dynamics::MapSpec;
use crate::error::{LdError, Result};
use crate::observables::{Observable, ObservableKind};
use crate::quadrature::{integrate_split, Tolerance};

/// Azuma–Hoeffding: `exp(-A² / (2 Σ M_i²))`.
pub fn azuma_bound(a: f64, m: &[f64]) -> f64 {
    let s: f64 = m.iter().map(|x| x * x).sum();
    (-a * a / (2.0 * s)).exp()
}

/// Schindler's concentration bound `2 exp(-ξ_n E_n / f_n)` for truncated
/// Birkhoff sums.
pub fn schindler_bound(e_n: f64, f_n: f64, xi_n: f64) -> f64 {
    2.0 * (-xi_n * e_n / f_n).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureRow {
    pub m: f64,
    /// Radius `r(M)` of the ball around `p` on which `φ > M`.
    pub radius: f64,
    /// Asymptotic slope `tM - ln λ`.
    pub slope: f64,
    /// `tM - ln λ + ln(c r)/n` at the report's `n_eval`.
    pub bound_at_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityRow {
    pub n: u64,
    /// `e^{tS_n} ~ x^{-nt}` near `p`.
    pub exponent: f64,
    pub infinite: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PressureReport {
    pub t: f64,
    pub lambda: f64,
    pub density: f64,
    pub n_eval: u64,
    pub rows: Vec<PressureRow>,
    pub integrability: Vec<IntegrabilityRow>,
}

/// Lower bounds on `liminf (1/n) ln ∫ e^{tS_n}` and the local integrability
/// of `e^{tS_n}` at the fixed point, for `φ = -ln|x - p|`.
pub fn pressure_diagnostics(
    map: &MapSpec,
    obs: &Observable,
    t: f64,
    m_list: &[f64],
    n_list: &[u64],
    n_eval: u64,
) -> Result<PressureReport> {
    let ObservableKind::LogPow { alpha, point } = obs.kind else {
        return Err(LdError::Invalid("pressure diagnostics need logpow:1:p".into()));
    };
    if alpha != 1.0 || point != map.periodic_point {
        return Err(LdError::Invalid("need alpha = 1 and p equal to the map's periodic point".into()));
    }
    if !(t > 0.0) || n_eval == 0 {
        return Err(LdError::Invalid("need t > 0 and n_eval >= 1".into()));
    }
    let raw = Observable::log_pow(1.0, point);
    let lambda = map.deriv_bound;
    let density = 1.0;
    let rows = m_list
        .iter()
        .map(|&m| {
            let radius = raw.radius_above(m).unwrap_or(0.0);
            let slope = t * m - lambda.ln();
            PressureRow {
                m,
                radius,
                slope,
                bound_at_n: slope + (density * radius).ln() / n_eval as f64,
            }
        })
        .collect();
    let integrability = n_list
        .iter()
        .map(|&n| {
            let exponent = n as f64 * t;
            IntegrabilityRow { n, exponent, infinite: exponent >= 1.0 }
        })
        .collect();
    Ok(PressureReport { t, lambda, density, n_eval, rows, integrability })
}

/// `∫_{2^{-J}}^1 exp(t S_n(x)) dx` for the doubling map and `φ = -ln x`.
/// Growth linear in `J` witnesses a logarithmically divergent integral.
pub fn partial_mgf_integral(t: f64, n: u32, j: u32) -> Result<f64> {
    if n == 0 || n > 10 {
        return Err(LdError::Invalid("probe supports 1 <= n <= 10".into()));
    }
    let f = |x: f64| {
        let mut y = x;
        let mut s = 0.0;
        for _ in 0..n {
            s -= y.ln();
            y = 2.0 * y;
            if y >= 1.0 {
                y -= 1.0;
            }
        }
        (t * s).exp()
    };
    let cells = 1u64 << (n - 1);
    let singular: Vec<f64> = (1..cells).map(|k| k as f64 / cells as f64).collect();
    let breaks: Vec<f64> = (1..j).map(|k| 2f64.powi(-(k as i32))).collect();
    let lo = 2f64.powi(-(j as i32));
    Ok(integrate_split(f, lo, 1.0, &breaks, &singular, Tolerance::rel(1e-9)).value)
}
