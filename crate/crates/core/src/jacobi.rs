//! Truncated two-variable expansions in `q = e(τ)`, `r = e(z)`.

use crate::fourier::{ExpTriple, FourierSeries3, GaussInt, TruncRegion};
use crate::qseries::QSeries;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Series `Σ c(n2, l2) q^{n2/2} r^{l2/2}`; every coefficient with
/// `n2 ≤ nmax2` is known. `weight` and `index2` (twice the index) are
/// metadata carried along for the Hecke and lift operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiSeries {
    coeffs: BTreeMap<(i64, i64), BigInt>,
    nmax2: i64,
    pub weight: i64,
    pub index2: i64,
}

impl JacobiSeries {
    pub fn zero(nmax2: i64, weight: i64, index2: i64) -> Self {
        JacobiSeries { coeffs: BTreeMap::new(), nmax2, weight, index2 }
    }

    pub fn one(nmax2: i64) -> Self {
        let mut s = Self::zero(nmax2, 0, 0);
        s.add_term(0, 0, &BigInt::one());
        s
    }

    /// Embed a q-series with integral or half-integral exponents.
    pub fn from_q(q: &QSeries) -> Self {
        let mut s = Self::zero(q.bound4().div_euclid(2), 0, 0);
        for (e4, c) in q.iter() {
            assert!(e4 % 2 == 0, "q-exponent {e4}/4 is not a half-integer");
            s.add_term(e4 / 2, 0, c);
        }
        s
    }

    pub fn nmax2(&self) -> i64 {
        self.nmax2
    }

    pub fn with_meta(mut self, weight: i64, index2: i64) -> Self {
        self.weight = weight;
        self.index2 = index2;
        self
    }

    pub fn add_term(&mut self, n2: i64, l2: i64, c: &BigInt) {
        if c.is_zero() || n2 > self.nmax2 {
            return;
        }
        let slot = self.coeffs.entry((n2, l2)).or_default();
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&(n2, l2));
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i64, i64), &BigInt)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at `q^{n2/2} r^{l2/2}`.
    pub fn coeff2(&self, n2: i64, l2: i64) -> BigInt {
        assert!(n2 <= self.nmax2, "coefficient at n2={n2} beyond truncation {}", self.nmax2);
        self.coeffs.get(&(n2, l2)).cloned().unwrap_or_default()
    }

    /// Coefficient at `q^n r^l` for integral `n, l`.
    pub fn coeff(&self, n: i64, l: i64) -> BigInt {
        self.coeff2(2 * n, 2 * l)
    }

    /// The row of `q^{n2/2}` as `l2 → c`.
    pub fn row(&self, n2: i64) -> BTreeMap<i64, BigInt> {
        self.coeffs
            .range((n2, i64::MIN)..=(n2, i64::MAX))
            .map(|((_, l), c)| (*l, c.clone()))
            .collect()
    }

    pub fn valuation2(&self) -> Option<i64> {
        self.coeffs.keys().next().map(|(n, _)| *n)
    }

    fn val_or_past(&self) -> i64 {
        self.valuation2().unwrap_or(self.nmax2 + 1)
    }

    pub fn truncate(&self, nmax2: i64) -> JacobiSeries {
        let nmax2 = nmax2.min(self.nmax2);
        JacobiSeries {
            coeffs: self.coeffs.range(..=(nmax2, i64::MAX)).map(|(k, c)| (*k, c.clone())).collect(),
            nmax2,
            weight: self.weight,
            index2: self.index2,
        }
    }

    pub fn add(&self, o: &JacobiSeries) -> JacobiSeries {
        let mut out = self.truncate(o.nmax2);
        for ((n, l), c) in &o.coeffs {
            out.add_term(*n, *l, c);
        }
        out
    }

    pub fn sub(&self, o: &JacobiSeries) -> JacobiSeries {
        self.add(&o.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, k: &BigInt) -> JacobiSeries {
        let mut out = JacobiSeries::zero(self.nmax2, self.weight, self.index2);
        for ((n, l), c) in &self.coeffs {
            out.add_term(*n, *l, &(c * k));
        }
        out
    }

    /// Multiply by `q^{n2/2} r^{l2/2}`.
    pub fn shift(&self, n2: i64, l2: i64) -> JacobiSeries {
        JacobiSeries {
            coeffs: self.coeffs.iter().map(|((n, l), c)| ((n + n2, l + l2), c.clone())).collect(),
            nmax2: self.nmax2 + n2,
            weight: self.weight,
            index2: self.index2,
        }
    }

    pub fn mul(&self, o: &JacobiSeries) -> JacobiSeries {
        let nmax2 = (self.nmax2 + o.val_or_past()).min(o.nmax2 + self.val_or_past());
        let mut acc: BTreeMap<(i64, i64), BigInt> = BTreeMap::new();
        for ((na, la), ca) in &self.coeffs {
            for ((nb, lb), cb) in o.coeffs.range(..=(nmax2 - na, i64::MAX)) {
                *acc.entry((na + nb, la + lb)).or_default() += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        JacobiSeries {
            coeffs: acc,
            nmax2,
            weight: self.weight + o.weight,
            index2: self.index2 + o.index2,
        }
    }

    /// In-place product with `(1 − q^{n2/2} r^{l2/2})`, `n2 ≥ 0`.
    pub fn mul_one_minus(&mut self, n2: i64, l2: i64) {
        assert!(n2 >= 0);
        let terms: Vec<((i64, i64), BigInt)> = self
            .coeffs
            .range(..=(self.nmax2 - n2, i64::MAX))
            .map(|(k, c)| (*k, c.clone()))
            .collect();
        for ((n, l), c) in terms {
            self.add_term(n + n2, l + l2, &-c);
        }
    }

    /// View as a three-variable series times `s^{m4/4}`.
    pub fn to_fourier(&self, m4: i64, region: TruncRegion) -> FourierSeries3 {
        FourierSeries3::from_terms(
            self.coeffs
                .iter()
                .map(|((n, l), c)| (ExpTriple::new(2 * n, 2 * l, m4), GaussInt::from(c.clone()))),
            region,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_minus_products() {
        let mut s = JacobiSeries::one(8);
        s.mul_one_minus(0, 2);
        s.mul_one_minus(2, -2);
        // (1 − r)(1 − q r^{-1}) = 1 − r − q r^{-1} + q
        assert_eq!(s.coeff(0, 0), BigInt::one());
        assert_eq!(s.coeff(0, 1), BigInt::from(-1));
        assert_eq!(s.coeff(1, -1), BigInt::from(-1));
        assert_eq!(s.coeff(1, 0), BigInt::one());
        assert_eq!(s.len(), 4);
    }
}
