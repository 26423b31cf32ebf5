//! Order-independent floating point summation.
//!
//! `ExactSum` keeps a two's-complement fixed-point register wide enough to
//! hold any finite `f64` exactly, plus 64 bits of carry headroom.  Adding and
//! merging are integer operations, so the rounded result does not depend on
//! the order in which terms or partial sums arrive.

use crate::real::Real;

const LIMBS: usize = 35;
const MASK52: u64 = (1u64 << 52) - 1;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExactSum {
    limbs: [u64; LIMBS],
    special: Option<u64>,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self { limbs: [0; LIMBS], special: None }
    }

    pub fn from_values<T: Real>(xs: impl IntoIterator<Item = T>) -> Self {
        let mut s = Self::new();
        for x in xs {
            s.add(x);
        }
        s
    }

    #[inline]
    pub fn add<T: Real>(&mut self, x: T) {
        self.add_f64(x.f64());
    }

    pub fn add_f64(&mut self, x: f64) {
        if x == 0.0 {
            return;
        }
        if !x.is_finite() {
            let prev = self.special.map(f64::from_bits).unwrap_or(0.0);
            self.special = Some((prev + x).to_bits());
            return;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp = ((bits >> 52) & 0x7ff) as usize;
        let frac = bits & MASK52;
        let (mant, shift) = if exp == 0 { (frac, 0) } else { (frac | (1u64 << 52), exp - 1) };
        let limb = shift / 64;
        let v = (mant as u128) << (shift % 64);
        let parts = [v as u64, (v >> 64) as u64];
        if negative {
            self.sub_at(limb, parts);
        } else {
            self.add_at(limb, parts);
        }
    }

    fn add_at(&mut self, limb: usize, parts: [u64; 2]) {
        let mut carry = 0u64;
        let mut i = limb;
        while i < LIMBS {
            let add = if i - limb < 2 { parts[i - limb] } else { 0 };
            if add == 0 && carry == 0 && i - limb >= 2 {
                break;
            }
            let (s1, c1) = self.limbs[i].overflowing_add(add);
            let (s2, c2) = s1.overflowing_add(carry);
            self.limbs[i] = s2;
            carry = (c1 | c2) as u64;
            i += 1;
        }
    }

    fn sub_at(&mut self, limb: usize, parts: [u64; 2]) {
        let mut borrow = 0u64;
        let mut i = limb;
        while i < LIMBS {
            let sub = if i - limb < 2 { parts[i - limb] } else { 0 };
            if sub == 0 && borrow == 0 && i - limb >= 2 {
                break;
            }
            let (s1, b1) = self.limbs[i].overflowing_sub(sub);
            let (s2, b2) = s1.overflowing_sub(borrow);
            self.limbs[i] = s2;
            borrow = (b1 | b2) as u64;
            i += 1;
        }
    }

    /// Adds another register in place.
    pub fn merge(&mut self, other: &ExactSum) {
        let mut carry = 0u64;
        for i in 0..LIMBS {
            let (s1, c1) = self.limbs[i].overflowing_add(other.limbs[i]);
            let (s2, c2) = s1.overflowing_add(carry);
            self.limbs[i] = s2;
            carry = (c1 | c2) as u64;
        }
        if let Some(o) = other.special {
            self.add_f64(f64::from_bits(o));
        }
    }

    /// Subtracts another register in place.
    pub fn unmerge(&mut self, other: &ExactSum) {
        let mut borrow = 0u64;
        for i in 0..LIMBS {
            let (s1, b1) = self.limbs[i].overflowing_sub(other.limbs[i]);
            let (s2, b2) = s1.overflowing_sub(borrow);
            self.limbs[i] = s2;
            borrow = (b1 | b2) as u64;
        }
        if let Some(o) = other.special {
            self.add_f64(-f64::from_bits(o));
        }
    }

    fn bit(mag: &[u64; LIMBS], idx: usize) -> u64 {
        (mag[idx / 64] >> (idx % 64)) & 1
    }

    /// Correctly rounded (nearest, ties to even) value of the sum.
    pub fn value(&self) -> f64 {
        if let Some(s) = self.special {
            return f64::from_bits(s);
        }
        let negative = self.limbs[LIMBS - 1] >> 63 == 1;
        let mut mag = self.limbs;
        if negative {
            let mut carry = 1u64;
            for l in mag.iter_mut() {
                let (s, c) = (!*l).overflowing_add(carry);
                *l = s;
                carry = c as u64;
            }
        }
        let Some(top) = (0..LIMBS).rev().find(|&i| mag[i] != 0) else {
            return 0.0;
        };
        let p = top * 64 + 63 - mag[top].leading_zeros() as usize;
        let sign = if negative { 1u64 << 63 } else { 0 };
        if p < 53 {
            return f64::from_bits(sign | mag[0]);
        }
        let lo = p - 52;
        let mut m = 0u64;
        for k in 0..53 {
            m |= Self::bit(&mag, lo + k) << k;
        }
        let round = Self::bit(&mag, lo - 1);
        let cut = lo - 1;
        let sticky = mag[..cut / 64].iter().any(|&l| l != 0)
            || (cut % 64 != 0 && mag[cut / 64] & ((1u64 << (cut % 64)) - 1) != 0);
        let mut p = p;
        if round == 1 && (sticky || m & 1 == 1) {
            m += 1;
            if m == 1u64 << 53 {
                m >>= 1;
                p += 1;
            }
        }
        let biased = p as u64 - 51;
        if biased >= 2047 {
            return f64::from_bits(sign | (0x7ffu64 << 52));
        }
        f64::from_bits(sign | (biased << 52) | (m & MASK52))
    }

    pub fn value_as<T: Real>(&self) -> T {
        T::c(self.value())
    }
}
