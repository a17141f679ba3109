use crate::rng::CounterRng;

#[derive(Debug, Clone)]
enum Source {
    Random(CounterRng),
    Periodic(Vec<bool>),
}

/// A lazily generated infinite binary expansion `0.b1 b2 b3 ...`.
///
/// Bit `b_k` (1-based) lives in word `(k-1)/64` at bit `63 - (k-1)%64`.
#[derive(Debug, Clone)]
pub struct BitTape {
    words: Vec<u64>,
    source: Source,
    prefix: Vec<bool>,
}

impl BitTape {
    /// i.i.d. fair bits determined by `(seed, index)`.
    pub fn random(seed: u64, index: u64) -> Self {
        BitTape {
            words: Vec::new(),
            source: Source::Random(CounterRng::new(seed, index)),
            prefix: Vec::new(),
        }
    }

    /// Fixed leading bits followed by the random tape of `(seed, index)`.
    pub fn with_prefix(prefix: &[bool], seed: u64, index: u64) -> Self {
        let mut t = Self::random(seed, index);
        t.prefix = prefix.to_vec();
        t
    }

    /// The purely periodic expansion repeating `pattern` forever.
    pub fn periodic(pattern: &[bool]) -> Self {
        assert!(!pattern.is_empty(), "empty period");
        BitTape {
            words: Vec::new(),
            source: Source::Periodic(pattern.to_vec()),
            prefix: Vec::new(),
        }
    }

    fn generate(&self, j: usize) -> u64 {
        let mut w = match &self.source {
            Source::Random(rng) => rng.word(j as u64),
            Source::Periodic(pat) => {
                let mut w = 0u64;
                for b in 0..64 {
                    if pat[(j * 64 + b) % pat.len()] {
                        w |= 1 << (63 - b);
                    }
                }
                w
            }
        };
        let start = j * 64;
        if start < self.prefix.len() {
            for b in 0..64 {
                if let Some(&bit) = self.prefix.get(start + b) {
                    let mask = 1u64 << (63 - b);
                    if bit {
                        w |= mask;
                    } else {
                        w &= !mask;
                    }
                }
            }
        }
        w
    }

    /// Make sure words `0..=j` exist.
    #[inline]
    pub fn ensure(&mut self, j: usize) {
        while self.words.len() <= j {
            let w = self.generate(self.words.len());
            self.words.push(w);
        }
    }

    #[inline]
    pub fn word(&mut self, j: usize) -> u64 {
        self.ensure(j);
        self.words[j]
    }

    /// Bit `b_k`, 1-based.
    pub fn bit(&mut self, k: u64) -> bool {
        let i = k - 1;
        (self.word((i / 64) as usize) >> (63 - i % 64)) & 1 == 1
    }

    /// Bits `b_{offset+1} .. b_{offset+64}`, most significant first.
    #[inline]
    pub fn window64(&mut self, offset: u64) -> u64 {
        let j = (offset / 64) as usize;
        let s = (offset % 64) as u32;
        self.ensure(j + 1);
        let hi = self.words[j];
        if s == 0 {
            hi
        } else {
            (hi << s) | (self.words[j + 1] >> (64 - s))
        }
    }

    /// Bits `b_{offset+1} .. b_{offset+128}`.
    #[inline]
    pub fn window128(&mut self, offset: u64) -> u128 {
        ((self.window64(offset) as u128) << 64) | self.window64(offset + 64) as u128
    }
}

/// A point of an orbit expressed as a tail of the tape, possibly
/// bit-complemented (the tent map's orientation-reversing branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitPoint {
    pub offset: u64,
    pub complement: bool,
}

impl BitPoint {
    #[inline]
    pub fn window64(self, tape: &mut BitTape) -> u64 {
        let w = tape.window64(self.offset);
        if self.complement {
            !w
        } else {
            w
        }
    }

    #[inline]
    pub fn window128(self, tape: &mut BitTape) -> u128 {
        let w = tape.window128(self.offset);
        if self.complement {
            !w
        } else {
            w
        }
    }

    /// The reflected point `1 - x`.
    pub fn reflect(self) -> BitPoint {
        BitPoint {
            complement: !self.complement,
            ..self
        }
    }

    /// `-ln x` computed from the expansion, scanning as many leading zeros
    /// as the point has. Never returns infinity for a random tape.
    #[inline]
    pub fn neg_ln(self, tape: &mut BitTape) -> f64 {
        let mut off = self.offset;
        let mut zeros = 0u64;
        let mut w = self.at(tape, off);
        while w == 0 {
            off += 64;
            zeros += 64;
            w = self.at(tape, off);
            if zeros > 1 << 20 {
                return f64::INFINITY;
            }
        }
        let lz = w.leading_zeros() as u64;
        zeros += lz;
        let m = if lz == 0 {
            w
        } else {
            self.at(tape, off + lz)
        };
        let mant = m as f64 * (1.0 / 9_223_372_036_854_775_808.0);
        (zeros + 1) as f64 * std::f64::consts::LN_2 - mant.ln()
    }

    #[inline]
    fn at(self, tape: &mut BitTape, off: u64) -> u64 {
        let w = tape.window64(off);
        if self.complement {
            !w
        } else {
            w
        }
    }

    /// Index `0..2^d` of the dyadic cylinder containing the point.
    #[inline]
    pub fn cylinder(self, tape: &mut BitTape, depth: u32) -> usize {
        if depth == 0 {
            return 0;
        }
        (self.window64(tape) >> (64 - depth)) as usize
    }

    /// Nearest `f64` to the 128-bit truncation of the point.
    pub fn to_f64(self, tape: &mut BitTape) -> f64 {
        let w = self.window128(tape);
        w as f64 * 2f64.powi(-128)
    }
}
