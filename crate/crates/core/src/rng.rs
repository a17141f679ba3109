//! Counter-based random numbers (Philox4x32-10).
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so sample
//! `i` of an experiment sees the same bits no matter which worker computes
//! it or in which order.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
#[inline]
pub fn philox4x32(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// A keyed stream of 64-bit words addressed by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
    stream: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: [seed as u32, (seed >> 32) as u32],
            stream,
        }
    }

    /// The `i`-th 64-bit word of this stream.
    #[inline]
    pub fn word(&self, i: u64) -> u64 {
        let block = i >> 1;
        let out = philox4x32(
            [
                block as u32,
                (block >> 32) as u32,
                self.stream as u32,
                (self.stream >> 32) as u32,
            ],
            self.key,
        );
        if i & 1 == 0 {
            ((out[0] as u64) << 32) | out[1] as u64
        } else {
            ((out[2] as u64) << 32) | out[3] as u64
        }
    }

    /// Uniform draw in the open interval (0, 1) with 53 random bits.
    #[inline]
    pub fn open01(&self, i: u64) -> f64 {
        ((self.word(i) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential(1) draw by inversion.
    #[inline]
    pub fn exp1(&self, i: u64) -> f64 {
        -self.open01(i).ln()
    }

    /// A sequential cursor over the stream.
    pub fn cursor(self) -> RngCursor {
        RngCursor { rng: self, next: 0 }
    }
}

/// Sequential view of a [`CounterRng`].
#[derive(Debug, Clone)]
pub struct RngCursor {
    rng: CounterRng,
    next: u64,
}

impl RngCursor {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let w = self.rng.word(self.next);
        self.next += 1;
        w
    }

    #[inline]
    pub fn open01(&mut self) -> f64 {
        let u = self.rng.open01(self.next);
        self.next += 1;
        u
    }

    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.open01().ln()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}
