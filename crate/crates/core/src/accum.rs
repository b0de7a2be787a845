//! Order-independent floating-point summation.
//!
//! [`ExactSum`] accumulates doubles into a fixed-point integer wide enough to
//! hold any finite f64 exactly, so the result depends only on the multiset of
//! summands. Sample moments computed through it are bit-for-bit invariant
//! under row shuffles.

const LIMB_BITS: u32 = 32;
const LIMBS: usize = 67;
const BIAS: i32 = 1074;
const RENORMALIZE_EVERY: u32 = 1 << 30;

#[derive(Clone)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u32,
    special: f64,
    has_special: bool,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum {
            limbs: [0; LIMBS],
            pending: 0,
            special: 0.0,
            has_special: false,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if !x.is_finite() {
            self.special += x;
            self.has_special = true;
            return;
        }
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac, -BIAS)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let pos = (exp + BIAS) as u32;
        let limb = (pos / LIMB_BITS) as usize;
        let shifted = (mantissa as u128) << (pos % LIMB_BITS);
        let mask = (1u128 << LIMB_BITS) - 1;
        let chunks = [
            (shifted & mask) as i64,
            ((shifted >> LIMB_BITS) & mask) as i64,
            ((shifted >> (2 * LIMB_BITS)) & mask) as i64,
        ];
        for (off, c) in chunks.iter().enumerate() {
            if negative {
                self.limbs[limb + off] -= c;
            } else {
                self.limbs[limb + off] += c;
            }
        }
        self.pending += 1;
        if self.pending >= RENORMALIZE_EVERY {
            self.normalize();
        }
    }

    fn normalize(&mut self) {
        for i in 0..LIMBS - 1 {
            let carry = self.limbs[i] >> LIMB_BITS;
            self.limbs[i] -= carry << LIMB_BITS;
            self.limbs[i + 1] += carry;
        }
        self.pending = 0;
    }

    /// The sum rounded to f64 (faithful, and fully determined by the summands).
    pub fn value(&self) -> f64 {
        if self.has_special {
            return self.special;
        }
        let mut c = self.clone();
        c.normalize();
        let negative = c.limbs[LIMBS - 1] < 0;
        if negative {
            c.limbs.iter_mut().for_each(|l| *l = -*l);
            c.normalize();
        }
        let mut s = 0.0f64;
        for i in (0..LIMBS).rev() {
            if c.limbs[i] != 0 {
                s += c.limbs[i] as f64 * pow2(i as i32 * LIMB_BITS as i32 - BIAS);
            }
        }
        if negative {
            -s
        } else {
            s
        }
    }
}

fn pow2(e: i32) -> f64 {
    if e > 1023 {
        f64::INFINITY
    } else if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + BIAS))
    } else {
        0.0
    }
}

/// Order-independent sum of a slice.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
