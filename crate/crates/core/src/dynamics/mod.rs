//! Expanding interval maps, exact symbolic orbits and shrinking-ball hits.
//!
//! Doubling and tent orbits are never iterated in floating point. A
//! Lebesgue-typical point is an i.i.d. fair bit tape; the doubling orbit
//! is the shifted tape and the tent orbit is its image under the tent map
//! itself (which semiconjugates doubling to tent).

mod tape;

pub use tape::{BitPoint, BitTape};

use serde::{Deserialize, Serialize};

use crate::error::{LdError, Result};

pub const DEFAULT_WINDOW_BITS: u32 = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapKind {
    Doubling,
    Tent,
    /// Full-branch piecewise-linear map. Branch `i` maps
    /// `[b_i, b_{i+1}]` onto `[0,1]` with slope `slopes[i]`.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
    },
}

/// An expanding interval map with a distinguished periodic point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub kind: MapKind,
    pub periodic_point: f64,
    pub period: u32,
    pub deriv_bound: f64,
}

impl MapSpec {
    pub fn doubling() -> Self {
        MapSpec {
            kind: MapKind::Doubling,
            periodic_point: 0.0,
            period: 1,
            deriv_bound: 2.0,
        }
    }

    pub fn tent() -> Self {
        MapSpec {
            kind: MapKind::Tent,
            periodic_point: 0.0,
            period: 1,
            deriv_bound: 2.0,
        }
    }

    /// Full-branch piecewise-linear map. `breakpoints` are the interior
    /// cut points; each slope must have modulus `1 / branch length`.
    pub fn piecewise_linear(breakpoints: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        let mut edges = vec![0.0];
        edges.extend(&breakpoints);
        edges.push(1.0);
        if slopes.len() != edges.len() - 1 {
            return Err(LdError::Invalid(format!(
                "{} branches need {} slopes, got {}",
                edges.len() - 1,
                edges.len() - 1,
                slopes.len()
            )));
        }
        for (i, w) in edges.windows(2).enumerate() {
            let len = w[1] - w[0];
            if len <= 0.0 {
                return Err(LdError::Invalid("breakpoints must increase in (0,1)".into()));
            }
            if ((slopes[i].abs() * len) - 1.0).abs() > 1e-9 {
                return Err(LdError::Invalid(format!(
                    "branch {i} is not full: |slope| * length = {}",
                    slopes[i].abs() * len
                )));
            }
            if slopes[i].abs() <= 1.0 {
                return Err(LdError::Invalid(format!("branch {i} is not expanding")));
            }
        }
        let kmax = slopes.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        // first branch fixes 0 when increasing
        let (p, period) = if slopes[0] > 0.0 { (0.0, 1) } else { (f64::NAN, 0) };
        let mut spec = MapSpec {
            kind: MapKind::PiecewiseLinear {
                breakpoints,
                slopes,
            },
            periodic_point: p,
            period,
            deriv_bound: kmax,
        };
        if period == 0 {
            // decreasing first branch: take the fixed point of branch 0
            let s = match &spec.kind {
                MapKind::PiecewiseLinear { slopes, .. } => slopes[0],
                _ => unreachable!(),
            };
            // T(x) = 1 + s x on branch 0 (s < 0); fixed point x = 1/(1-s)
            spec.periodic_point = 1.0 / (1.0 - s);
            spec.period = 1;
        }
        Ok(spec)
    }

    /// Replace the periodic point, checking its period by iteration.
    pub fn with_periodic_point(mut self, p: f64, period: u32, deriv_bound: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || period == 0 {
            return Err(LdError::Invalid("periodic point must lie in [0,1]".into()));
        }
        let mut x = p;
        for _ in 0..period {
            x = iterate(&self, x)?;
        }
        if (x - p).abs() > 1e-9 {
            return Err(LdError::Invalid(format!(
                "{p} is not periodic with period {period}"
            )));
        }
        if deriv_bound <= 1.0 {
            return Err(LdError::Invalid("derivative bound must exceed 1".into()));
        }
        self.periodic_point = p;
        self.period = period;
        self.deriv_bound = deriv_bound;
        Ok(self)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, MapKind::Doubling | MapKind::Tent)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MapKind::Doubling => "doubling",
            MapKind::Tent => "tent",
            MapKind::PiecewiseLinear { .. } => "piecewise-linear",
        }
    }
}

/// `doubling`, `tent`, or `pwl:<cuts>:<slopes>` with comma-separated lists.
impl std::str::FromStr for MapSpec {
    type Err = LdError;

    fn from_str(s: &str) -> Result<Self> {
        let list = |t: &str| -> Result<Vec<f64>> {
            t.split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| LdError::Invalid(format!("bad number '{x}' in map '{s}'")))
                })
                .collect()
        };
        match s.split(':').collect::<Vec<_>>().as_slice() {
            ["doubling"] => Ok(MapSpec::doubling()),
            ["tent"] => Ok(MapSpec::tent()),
            ["pwl", cuts, slopes] => MapSpec::piecewise_linear(list(cuts)?, list(slopes)?),
            _ => Err(LdError::Invalid(format!("unknown map '{s}'"))),
        }
    }
}

/// One application of the map by its branch formula.
pub fn iterate(map: &MapSpec, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(LdError::Domain(format!("x = {x} outside [0,1]")));
    }
    Ok(match &map.kind {
        MapKind::Doubling => {
            if x < 0.5 {
                2.0 * x
            } else {
                2.0 * x - 1.0
            }
        }
        MapKind::Tent => 1.0 - (2.0 * x - 1.0).abs(),
        MapKind::PiecewiseLinear {
            breakpoints,
            slopes,
        } => {
            let i = breakpoints.partition_point(|&b| b <= x).min(slopes.len() - 1);
            let left = if i == 0 { 0.0 } else { breakpoints[i - 1] };
            let right = breakpoints.get(i).copied().unwrap_or(1.0);
            let y = if slopes[i] > 0.0 {
                (x - left) * slopes[i]
            } else {
                (right - x) * -slopes[i]
            };
            y.clamp(0.0, 1.0)
        }
    })
}

/// Exact orbit of a Lebesgue-random point, keyed by `(seed, sample_index)`.
#[derive(Debug, Clone)]
pub struct OrbitStream {
    pub seed: u64,
    pub sample_index: u64,
    pub window_bits: u32,
    tape: BitTape,
}

impl OrbitStream {
    pub fn new(seed: u64, sample_index: u64) -> Self {
        OrbitStream {
            seed,
            sample_index,
            window_bits: DEFAULT_WINDOW_BITS,
            tape: BitTape::random(seed, sample_index),
        }
    }

    /// A stream over an explicit tape (fixed prefixes, periodic points).
    pub fn from_tape(tape: BitTape) -> Self {
        OrbitStream {
            seed: 0,
            sample_index: 0,
            window_bits: DEFAULT_WINDOW_BITS,
            tape,
        }
    }

    pub fn with_window_bits(mut self, bits: u32) -> Self {
        assert!((8..=128).contains(&bits), "window_bits must be in 8..=128");
        self.window_bits = bits;
        self
    }

    pub fn tape_mut(&mut self) -> &mut BitTape {
        &mut self.tape
    }

    /// Symbolic position of the `n`-th orbit point.
    #[inline]
    pub fn point(&mut self, kind: &MapKind, n: u64) -> BitPoint {
        match kind {
            MapKind::Tent => BitPoint {
                offset: n + 1,
                complement: self.tape.bit(n + 1),
            },
            _ => BitPoint {
                offset: n,
                complement: false,
            },
        }
    }

    /// The window value of `x_n` (doubling) or `s(x_n)` (tent) as a
    /// 128-bit fixed-point fraction truncated to `window_bits`.
    pub fn fixed(&mut self, kind: &MapKind, n: u64) -> Result<u128> {
        if !matches!(kind, MapKind::Doubling | MapKind::Tent) {
            return Err(LdError::Invalid(
                "exact orbits exist only for the doubling and tent maps".into(),
            ));
        }
        let w = self.point(kind, n).window128(&mut self.tape);
        let drop = 128 - self.window_bits;
        Ok(if drop == 0 { w } else { (w >> drop) << drop })
    }

    /// Distance from the `n`-th orbit point to `p`, exact at window precision.
    pub fn distance(&mut self, kind: &MapKind, n: u64, p: f64) -> Result<f64> {
        let x = self.fixed(kind, n)?;
        let pf = to_fixed(p);
        let d = if x > pf { x - pf } else { pf - x };
        Ok(d as f64 * 2f64.powi(-128))
    }
}

fn to_fixed(p: f64) -> u128 {
    if p >= 1.0 {
        u128::MAX
    } else {
        // p has at most 53 significant bits, exact after scaling
        (p * 2f64.powi(128)) as u128
    }
}

/// `x_n` for the doubling map or `s(x_n)` for the tent map.
pub fn orbit_point(stream: &mut OrbitStream, kind: &MapKind, n: u64) -> Result<f64> {
    let w = stream.fixed(kind, n)?;
    Ok(w as f64 * 2f64.powi(-128))
}

/// All `1 <= n <= n_max` with `d(T^n x, p) <= n^(-gamma)`.
pub fn hit_times(stream: &mut OrbitStream, map: &MapSpec, gamma: f64, n_max: u64) -> Result<Vec<u64>> {
    if gamma <= 0.0 {
        return Err(LdError::Invalid("gamma must be positive".into()));
    }
    if !map.is_exact() {
        return Err(LdError::Invalid(
            "hit detection needs an exact orbit (doubling or tent)".into(),
        ));
    }
    let smallest = (n_max as f64).powf(-gamma);
    let floor = 2f64.powi(-(stream.window_bits as i32) + 8);
    if smallest < floor {
        return Err(LdError::Precision {
            radius: smallest,
            bits_available: stream.window_bits - 8,
        });
    }
    let p = map.periodic_point;
    let mut hits = Vec::new();
    if p == 0.0 || p == 1.0 {
        // Fast path: compare the leading 64 bits against a per-octave bound.
        let mut octave_start = 1u64;
        let mut n = 1u64;
        while n <= n_max {
            let octave_end = (octave_start * 2).min(n_max + 1);
            // radius is largest at the octave start
            let rmax = (octave_start as f64).powf(-gamma);
            let cut = if rmax >= 1.0 {
                u64::MAX
            } else {
                (rmax * 2f64.powi(64)) as u64 + 1
            };
            while n < octave_end {
                let mut pt = stream.point(&map.kind, n);
                if p == 1.0 {
                    pt = pt.reflect();
                }
                let w = pt.window64(stream.tape_mut());
                if w <= cut {
                    let r = (n as f64).powf(-gamma);
                    let dist = stream.distance(&map.kind, n, p)?;
                    if dist <= r {
                        hits.push(n);
                    }
                }
                n += 1;
            }
            octave_start *= 2;
        }
    } else {
        for n in 1..=n_max {
            if stream.distance(&map.kind, n, p)? <= (n as f64).powf(-gamma) {
                hits.push(n);
            }
        }
    }
    Ok(hits)
}
