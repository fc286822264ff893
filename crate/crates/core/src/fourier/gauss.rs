//! Gaussian integers over arbitrary-precision integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// `re + i·im` with exact big-integer parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussInt { re: re.into(), im: im.into() }
    }

    pub fn real(re: impl Into<BigInt>) -> Self {
        GaussInt { re: re.into(), im: BigInt::zero() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::real(1)
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Self::new(1, 0),
            1 => Self::new(0, 1),
            2 => Self::new(-1, 0),
            _ => Self::new(0, -1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussInt { re: self.re.clone(), im: -&self.im }
    }

    /// `re² + im²`.
    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiply by `i^k` without general multiplication.
    pub fn mul_i_pow(&self, k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => self.clone(),
            1 => GaussInt { re: -&self.im, im: self.re.clone() },
            2 => GaussInt { re: -&self.re, im: -&self.im },
            _ => GaussInt { re: self.im.clone(), im: -&self.re },
        }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if self.im.is_zero() {
            return GaussInt { re: &self.re * k, im: BigInt::zero() };
        }
        GaussInt { re: &self.re * k, im: &self.im * k }
    }

    /// Exact division by a rational integer; `None` when not divisible.
    pub fn div_exact(&self, k: &BigInt) -> Option<Self> {
        let (qr, rr) = self.re.div_rem(k);
        let (qi, ri) = self.im.div_rem(k);
        if rr.is_zero() && ri.is_zero() {
            Some(GaussInt { re: qr, im: qi })
        } else {
            None
        }
    }

    /// Exact division by a Gaussian integer; `None` when not divisible.
    pub fn div_exact_gauss(&self, d: &GaussInt) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let n = d.norm();
        let num = self.mul_ref(&d.conj());
        num.div_exact(&n)
    }

    /// `acc += a·b`, avoiding temporaries for real operands.
    pub fn add_mul(&mut self, a: &GaussInt, b: &GaussInt) {
        if a.im.is_zero() && b.im.is_zero() {
            self.re += &a.re * &b.re;
            return;
        }
        self.re += &a.re * &b.re - &a.im * &b.im;
        self.im += &a.re * &b.im + &a.im * &b.re;
    }

    pub fn mul_ref(&self, b: &GaussInt) -> GaussInt {
        let mut acc = GaussInt::zero();
        acc.add_mul(self, b);
        acc
    }

    /// gcd of both parts as a rational integer (content).
    pub fn content(&self) -> BigInt {
        self.re.gcd(&self.im)
    }

    pub fn to_real(&self) -> Option<&BigInt> {
        if self.im.is_zero() {
            Some(&self.re)
        } else {
            None
        }
    }
}

impl From<i64> for GaussInt {
    fn from(v: i64) -> Self {
        GaussInt::real(v)
    }
}

impl From<BigInt> for GaussInt {
    fn from(v: BigInt) -> Self {
        GaussInt { re: v, im: BigInt::zero() }
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl<'a> Add<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn add(self, b: &GaussInt) -> GaussInt {
        GaussInt { re: &self.re + &b.re, im: &self.im + &b.im }
    }
}

impl<'a> Sub<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn sub(self, b: &GaussInt) -> GaussInt {
        GaussInt { re: &self.re - &b.re, im: &self.im - &b.im }
    }
}

impl<'a> Mul<&'a GaussInt> for &'a GaussInt {
    type Output = GaussInt;
    fn mul(self, b: &GaussInt) -> GaussInt {
        self.mul_ref(b)
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt { re: -self.re, im: -self.im }
    }
}

impl Neg for &GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt { re: -&self.re, im: -&self.im }
    }
}

impl AddAssign<&GaussInt> for GaussInt {
    fn add_assign(&mut self, b: &GaussInt) {
        self.re += &b.re;
        if !b.im.is_zero() {
            self.im += &b.im;
        }
    }
}

impl SubAssign<&GaussInt> for GaussInt {
    fn sub_assign(&mut self, b: &GaussInt) {
        self.re -= &b.re;
        if !b.im.is_zero() {
            self.im -= &b.im;
        }
    }
}

impl One for GaussInt {
    fn one() -> Self {
        GaussInt::real(1)
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, b: GaussInt) -> GaussInt {
        self.mul_ref(&b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_powers_cycle() {
        let i = GaussInt::i_pow(1);
        assert_eq!(&i * &i, GaussInt::real(-1));
        assert_eq!(GaussInt::i_pow(-1), GaussInt::new(0, -1));
        assert_eq!(GaussInt::new(3, 4).mul_i_pow(1), &GaussInt::new(3, 4) * &i);
    }

    #[test]
    fn exact_division() {
        let a = GaussInt::new(6, -4);
        assert_eq!(a.div_exact(&BigInt::from(2)), Some(GaussInt::new(3, -2)));
        assert_eq!(a.div_exact(&BigInt::from(4)), None);
        let d = GaussInt::new(1, 1);
        let p = &a * &d;
        assert_eq!(p.div_exact_gauss(&d), Some(a));
    }
}
