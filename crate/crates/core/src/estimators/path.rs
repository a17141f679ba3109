//! Sequential observable values `φ(x_0), φ(x_1), ...` along one sample path.

use std::f64::consts::LN_2;

use crate::dynamics::{iterate, BitPoint, BitTape, MapKind, MapSpec, OrbitStream};
use crate::error::Result;
use crate::observables::{Observable, ObservableKind};
use crate::rng::{CounterRng, RngCursor};

use super::tail::Channel;

/// Significant bits required of the register before falling back to the tape.
const MIN_MANTISSA_BITS: u32 = 60;

#[derive(Clone, Copy)]
enum Lane {
    /// Observable of `-ln x` (`flip`: of `-ln(1-x)`).
    NegLog { flip: bool },
    Cylinder { depth: u32 },
}

/// Doubling/tent orbit read through a 128-bit shift register over the tape.
/// Values agree bit for bit with [`Observable::eval_point`].
struct Register {
    tape: BitTape,
    /// Bits `b_{t+1} ..`; the low `consumed` bits are padding.
    reg: u128,
    next_word: usize,
    consumed: u32,
    tent: bool,
    lane: Lane,
}

impl Register {
    fn new(mut tape: BitTape, tent: bool, lane: Lane) -> Self {
        let reg = ((tape.word(0) as u128) << 64) | tape.word(1) as u128;
        Register { tape, reg, next_word: 2, consumed: 0, tent, lane }
    }

    #[inline]
    fn advance(&mut self) {
        self.reg <<= 1;
        self.consumed += 1;
        if self.consumed == 64 {
            self.reg |= self.tape.word(self.next_word) as u128;
            self.next_word += 1;
            self.consumed = 0;
        }
    }

    /// Shared coordinate of the current point for every observable in the lane.
    #[inline]
    fn coord(&mut self, t: u64) -> Coord {
        let (mut w, valid, complement) = if self.tent {
            let c = (self.reg >> 127) == 1;
            (self.reg << 1, 127 - self.consumed, c)
        } else {
            (self.reg, 128 - self.consumed, false)
        };
        match self.lane {
            Lane::Cylinder { depth } => {
                if complement {
                    w = !w;
                }
                Coord::Cell(if depth == 0 { 0 } else { (w >> (128 - depth)) as usize })
            }
            Lane::NegLog { flip } => {
                if complement != flip {
                    w = !w;
                }
                let hi = (w >> 64) as u64;
                let lz = hi.leading_zeros();
                if hi == 0 || valid - lz < MIN_MANTISSA_BITS {
                    let pt = BitPoint {
                        offset: if self.tent { t + 1 } else { t },
                        complement: complement != flip,
                    };
                    return Coord::NegLog(pt.neg_ln(&mut self.tape));
                }
                let m = ((w << lz) >> 64) as u64;
                let mant = m as f64 * (1.0 / 9_223_372_036_854_775_808.0);
                Coord::NegLog((lz as u64 + 1) as f64 * LN_2 - mant.ln())
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Coord {
    NegLog(f64),
    Cell(usize),
}

impl Coord {
    #[inline]
    fn apply(self, obs: &Observable) -> f64 {
        match self {
            Coord::NegLog(l) => obs.eval_neg_log(l),
            Coord::Cell(j) => match &obs.kind {
                ObservableKind::CylinderCoded { values, .. } => values[j] - obs.shift(),
                _ => unreachable!("cylinder lane with a non-cylinder observable"),
            },
        }
    }
}

/// A register lane shared by all observables, if one exists.
fn shared_lane(obs: &[Observable]) -> Option<Lane> {
    let first = register_lane(obs.first()?)?;
    let same = obs.iter().all(|o| match (register_lane(o), first) {
        (Some(Lane::NegLog { flip: a }), Lane::NegLog { flip: b }) => a == b,
        (Some(Lane::Cylinder { depth: a }), Lane::Cylinder { depth: b }) => a == b,
        _ => false,
    });
    same.then_some(first)
}

fn register_lane(obs: &Observable) -> Option<Lane> {
    match &obs.kind {
        ObservableKind::CylinderCoded { depth, .. } => Some(Lane::Cylinder { depth: *depth }),
        _ => match obs.kind.singular_point() {
            Some(p) if p == 0.0 => Some(Lane::NegLog { flip: false }),
            Some(p) if p == 1.0 => Some(Lane::NegLog { flip: true }),
            _ => None,
        },
    }
}

enum State<'a> {
    Iid { rng: RngCursor, at_zero: bool },
    Register(Register),
    Exact { stream: OrbitStream, kind: &'a MapKind },
    Float { map: &'a MapSpec, x: f64 },
}

/// Values of one or more observables along a single sample path.
pub struct PathValues<'a> {
    obs: &'a [Observable],
    state: State<'a>,
    t: u64,
}

impl<'a> PathValues<'a> {
    pub fn new(channel: &'a Channel, obs: &'a Observable, seed: u64, index: u64) -> Self {
        Self::multi(channel, std::slice::from_ref(obs), seed, index)
    }

    /// A path evaluating every observable in `obs` at each step.
    pub fn multi(channel: &'a Channel, obs: &'a [Observable], seed: u64, index: u64) -> Self {
        let state = match channel {
            Channel::Iid => State::Iid {
                rng: CounterRng::new(seed, index).cursor(),
                at_zero: obs.iter().all(|o| o.singular_point() == Some(0.0)),
            },
            Channel::Orbit(map) if map.is_exact() => match shared_lane(obs) {
                Some(lane) => State::Register(Register::new(
                    BitTape::random(seed, index),
                    matches!(map.kind, MapKind::Tent),
                    lane,
                )),
                None => State::Exact {
                    stream: OrbitStream::new(seed, index),
                    kind: &map.kind,
                },
            },
            Channel::Orbit(map) => {
                let mut stream = OrbitStream::new(seed, index);
                let x = stream.point(&MapKind::Doubling, 0).to_f64(stream.tape_mut());
                State::Float { map, x }
            }
        };
        PathValues { obs, state, t: 0 }
    }

    /// Continue along an explicit exact orbit.
    pub fn from_stream(stream: OrbitStream, kind: &'a MapKind, obs: &'a Observable) -> Self {
        PathValues {
            obs: std::slice::from_ref(obs),
            state: State::Exact { stream, kind },
            t: 0,
        }
    }

    /// Number of steps taken so far.
    pub fn position(&self) -> u64 {
        self.t
    }

    /// Value of the first observable at the current point; advances one step.
    #[inline]
    pub fn next_value(&mut self) -> Result<f64> {
        let mut out = [0.0];
        self.step(&mut out, 1)?;
        Ok(out[0])
    }

    /// Values of all observables at the current point; advances one step.
    #[inline]
    pub fn next_values(&mut self, out: &mut [f64]) -> Result<()> {
        self.step(out, self.obs.len())
    }

    #[inline]
    fn step(&mut self, out: &mut [f64], k: usize) -> Result<()> {
        let t = self.t;
        self.t += 1;
        let obs = &self.obs[..k];
        match &mut self.state {
            State::Iid { rng, at_zero } => {
                if *at_zero {
                    let l = rng.exp1();
                    obs.iter().zip(out).for_each(|(o, v)| *v = o.eval_neg_log(l));
                } else {
                    let u = rng.open01();
                    obs.iter().zip(out).for_each(|(o, v)| *v = o.eval_unchecked(u));
                }
            }
            State::Register(r) => {
                let c = r.coord(t);
                r.advance();
                obs.iter().zip(out).for_each(|(o, v)| *v = c.apply(o));
            }
            State::Exact { stream, kind } => {
                let pt = stream.point(kind, t);
                for (o, v) in obs.iter().zip(out) {
                    *v = o.eval_point(stream.tape_mut(), pt)?;
                }
            }
            State::Float { map, x } => {
                for (o, v) in obs.iter().zip(out) {
                    *v = o.eval_checked(*x)?;
                }
                *x = iterate(map, *x)?;
            }
        }
        Ok(())
    }
}
