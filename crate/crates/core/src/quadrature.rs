//! Adaptive Gauss–Kronrod quadrature with geometric panels toward
//! integrable endpoint singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Smallest relative panel width on a singular ladder.
pub const LADDER_DEPTH: i32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance { abs: 1e-300, rel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive GK15 on a finite interval with a regular integrand.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    integrate_ref(&f, a, b, tol)
}

fn integrate_ref<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a == b {
        return QuadResult::default();
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let (mut total, mut err, mut evals) = (v, e, 15usize);
    while err > tol.abs.max(tol.rel * total.abs()) && evals < 15 * 4000 {
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        evals += 30;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2 });
    }
    // re-sum to shed drift from incremental updates
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    QuadResult { value, error, evals }
}

/// Integrate toward a singular endpoint `s` from the regular end `r`
/// using panels whose width halves at every step.
fn ladder<F: Fn(f64) -> f64>(f: &F, r: f64, s: f64, tol: Tolerance) -> QuadResult {
    let h = r - s;
    let mut out = QuadResult::default();
    let mut prev = f64::NAN;
    let mut ratio = 1.0;
    let mut small_run = 0;
    for j in 0..=LADDER_DEPTH {
        if j == LADDER_DEPTH {
            if ratio < 1.0 {
                let tail = prev * ratio / (1.0 - ratio);
                out.value += tail.copysign(out.value);
                out.error += tail;
            }
            break;
        }
        let outer = s + h * 2f64.powi(-j);
        let inner = s + h * 2f64.powi(-j - 1);
        if inner == s || inner == outer || (outer - inner).abs() < s.abs() * 1e-12 {
            // abscissae no longer resolve the distance to s: extrapolate
            if ratio < 0.97 {
                let tail = prev * ratio / (1.0 - ratio);
                out.value += tail.copysign(out.value);
                out.error += tail;
            }
            break;
        }
        let (lo, hi) = if inner < outer { (inner, outer) } else { (outer, inner) };
        let q = integrate_ref(f, lo, hi, Tolerance { abs: tol.abs, rel: tol.rel * 0.1 });
        out.value += q.value;
        out.error += q.error;
        out.evals += q.evals;
        let mag = q.value.abs();
        ratio = if prev.is_nan() || prev == 0.0 { 1.0 } else { mag / prev };
        prev = mag;
        if j >= 6 && ratio < 0.97 {
            let tail = mag * ratio / (1.0 - ratio);
            if tail <= 1e-3 * tol.rel * out.value.abs() || tail <= tol.abs {
                small_run += 1;
                if small_run >= 3 {
                    out.value += tail.copysign(q.value);
                    out.error += tail;
                    break;
                }
            } else {
                small_run = 0;
            }
        } else {
            small_run = 0;
        }
    }
    out
}

/// Integrate `f` over `[a, b]` where `f` may have integrable singularities
/// at the listed points (endpoints included).
pub fn integrate_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    singular: &[f64],
    tol: Tolerance,
) -> QuadResult {
    integrate_split(f, a, b, &[], singular, tol)
}

/// As [`integrate_singular`], additionally splitting at `breaks`
/// (jumps or kinks of an otherwise regular integrand).
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    singular: &[f64],
    tol: Tolerance,
) -> QuadResult {
    let mut cuts: Vec<f64> = singular
        .iter()
        .chain(breaks)
        .copied()
        .filter(|s| *s > a && *s < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let is_sing = |x: f64| singular.iter().any(|s| *s == x);
    let mut out = QuadResult::default();
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        let q = match (is_sing(l), is_sing(r)) {
            (false, false) => integrate_ref(&f, l, r, tol),
            (true, false) => ladder(&f, r, l, tol),
            (false, true) => ladder(&f, l, r, tol),
            (true, true) => {
                let m = 0.5 * (l + r);
                let q1 = ladder(&f, m, l, tol);
                let q2 = ladder(&f, m, r, tol);
                QuadResult {
                    value: q1.value + q2.value,
                    error: q1.error + q2.error,
                    evals: q1.evals + q2.evals,
                }
            }
        };
        out.value += q.value;
        out.error += q.error;
        out.evals += q.evals;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::rel(1e-14));
        assert!((q.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn log_singularity() {
        let q = integrate_singular(|x| -x.ln(), 0.0, 1.0, &[0.0], Tolerance::rel(1e-12));
        assert!((q.value - 1.0).abs() < 1e-11, "{}", q.value);
        let q = integrate_singular(|x| x.ln().powi(2), 0.0, 1.0, &[0.0], Tolerance::rel(1e-12));
        assert!((q.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn power_singularity_both_sides() {
        let p = 0.3;
        let q = integrate_singular(
            |x: f64| (x - p).abs().powf(-0.5),
            0.0,
            1.0,
            &[p],
            Tolerance::rel(1e-12),
        );
        let exact = 2.0 * (p.sqrt() + (1.0 - p).sqrt());
        // an interior singularity is resolved only to ~1e-12 * p in x
        assert!((q.value - exact).abs() < 1e-8, "{} vs {exact}", q.value);
    }
}
