//! One-variable truncated q-expansions.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// Truncated series in `q` with exponents stored ×4; every coefficient with
/// exponent `≤ bound4` is known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    coeffs: BTreeMap<i64, BigInt>,
    bound4: i64,
}

impl QSeries {
    pub fn zero(bound4: i64) -> Self {
        QSeries { coeffs: BTreeMap::new(), bound4 }
    }

    pub fn one(bound4: i64) -> Self {
        Self::monomial(0, BigInt::one(), bound4)
    }

    pub fn monomial(e4: i64, c: BigInt, bound4: i64) -> Self {
        let mut s = Self::zero(bound4);
        s.add_term(e4, &c);
        s
    }

    /// From coefficients of integral powers `q^0, q^1, …`.
    pub fn from_q_coeffs(cs: &[BigInt], bound4: i64) -> Self {
        let mut s = Self::zero(bound4);
        for (n, c) in cs.iter().enumerate() {
            s.add_term(4 * n as i64, c);
        }
        s
    }

    pub fn bound4(&self) -> i64 {
        self.bound4
    }

    pub fn add_term(&mut self, e4: i64, c: &BigInt) {
        if c.is_zero() || e4 > self.bound4 {
            return;
        }
        let slot = self.coeffs.entry(e4).or_default();
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&e4);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &BigInt)> {
        self.coeffs.iter()
    }

    pub fn coeff4(&self, e4: i64) -> BigInt {
        assert!(e4 <= self.bound4, "coefficient q^{e4}/4 beyond truncation {}", self.bound4);
        self.coeffs.get(&e4).cloned().unwrap_or_default()
    }

    /// Coefficient of `q^n` for integral `n`.
    pub fn coeff(&self, n: i64) -> BigInt {
        self.coeff4(4 * n)
    }

    pub fn valuation4(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    fn val_or_past(&self) -> i64 {
        self.valuation4().unwrap_or(self.bound4 + 1)
    }

    pub fn add(&self, o: &QSeries) -> QSeries {
        let mut out = self.truncate(self.bound4.min(o.bound4));
        for (e, c) in &o.coeffs {
            out.add_term(*e, c);
        }
        out
    }

    pub fn sub(&self, o: &QSeries) -> QSeries {
        self.add(&o.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, k: &BigInt) -> QSeries {
        let mut out = QSeries::zero(self.bound4);
        for (e, c) in &self.coeffs {
            out.add_term(*e, &(c * k));
        }
        out
    }

    pub fn truncate(&self, bound4: i64) -> QSeries {
        let bound4 = bound4.min(self.bound4);
        QSeries {
            coeffs: self.coeffs.range(..=bound4).map(|(e, c)| (*e, c.clone())).collect(),
            bound4,
        }
    }

    /// Multiply by `q^{e4/4}`.
    pub fn shift(&self, e4: i64) -> QSeries {
        QSeries {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + e4, c.clone())).collect(),
            bound4: self.bound4 + e4,
        }
    }

    pub fn mul(&self, o: &QSeries) -> QSeries {
        let bound4 = (self.bound4 + o.val_or_past()).min(o.bound4 + self.val_or_past());
        let mut acc: BTreeMap<i64, BigInt> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in o.coeffs.range(..=bound4 - ea) {
                *acc.entry(ea + eb).or_default() += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        QSeries { coeffs: acc, bound4 }
    }

    pub fn pow(&self, k: u32) -> QSeries {
        let mut out = QSeries::one(self.bound4);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Exact inverse of a series whose lowest coefficient is `±1`.
    pub fn inverse(&self) -> Option<QSeries> {
        let v = self.valuation4()?;
        let lead = self.coeffs[&v].clone();
        if lead.abs() != BigInt::one() {
            return None;
        }
        // relative precision of self is bound4 − v; the inverse starts at −v
        let bound4 = self.bound4 - 2 * v;
        let unit = self.shift(-v);
        let prec = unit.bound4;
        let mut inv: BTreeMap<i64, BigInt> = BTreeMap::new();
        let steps: Vec<i64> = unit.coeffs.keys().copied().filter(|e| *e > 0).collect();
        // exponents of the inverse lie in the additive monoid spanned by `steps`
        let mut frontier: std::collections::BTreeSet<i64> = [0].into_iter().collect();
        while let Some(e) = frontier.pop_first() {
            if e > prec {
                break;
            }
            let mut c = if e == 0 { BigInt::one() } else { BigInt::zero() };
            for s in &steps {
                if *s > e {
                    break;
                }
                if let Some(x) = inv.get(&(e - s)) {
                    c -= &unit.coeffs[s] * x;
                }
            }
            let c = c * &lead;
            if !c.is_zero() {
                inv.insert(e, c);
            }
            for s in &steps {
                frontier.insert(e + s);
            }
        }
        Some(QSeries { coeffs: inv, bound4: prec }.shift(-v).truncate(bound4))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_inverse() {
        let s = QSeries::from_q_coeffs(&[BigInt::one(), BigInt::from(-1)], 40);
        let inv = s.inverse().unwrap();
        for n in 0..=10 {
            assert_eq!(inv.coeff(n), BigInt::one());
        }
        assert_eq!(s.mul(&inv), QSeries::one(40));
    }

    #[test]
    fn inverse_with_valuation() {
        // (q − q²)^{-1} = q^{-1}(1 + q + q² + …)
        let s = QSeries::from_q_coeffs(&[BigInt::zero(), BigInt::one(), BigInt::from(-1)], 20);
        let inv = s.inverse().unwrap();
        assert_eq!(inv.valuation4(), Some(-4));
        assert_eq!(inv.bound4(), 12);
        assert_eq!(inv.coeff(3), BigInt::one());
    }
}
