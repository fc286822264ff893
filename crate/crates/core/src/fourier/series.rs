use super::gauss::GaussInt;
use super::FourierError;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Sub};

/// Bound used for exact (untruncated) series. Large enough that no
/// computation here reaches it, small enough that sums never overflow.
pub const UNBOUNDED: i64 = 1 << 40;

/// Exponent triple stored as 4× the exponents of `q = e(z1)`, `r = e(z2)`,
/// `s = e(z3)`, where `e(x) = exp(2πi x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExpTriple {
    pub n4: i64,
    pub l4: i64,
    pub m4: i64,
}

impl ExpTriple {
    pub const fn new(n4: i64, l4: i64, m4: i64) -> Self {
        ExpTriple { n4, l4, m4 }
    }

    /// From exponents of `exp(πi(n z1 + l z2 + m z3))`.
    pub const fn from_pi(n: i64, l: i64, m: i64) -> Self {
        ExpTriple { n4: 2 * n, l4: 2 * l, m4: 2 * m }
    }

    /// From exponents of `q^n r^l s^m`.
    pub const fn from_q(n: i64, l: i64, m: i64) -> Self {
        ExpTriple { n4: 4 * n, l4: 4 * l, m4: 4 * m }
    }

    /// `(n, l, m)` in `exp(πi·)` units, if integral.
    pub fn to_pi(&self) -> Option<(i64, i64, i64)> {
        if self.n4 % 2 == 0 && self.l4 % 2 == 0 && self.m4 % 2 == 0 {
            Some((self.n4 / 2, self.l4 / 2, self.m4 / 2))
        } else {
            None
        }
    }

    /// `(n, l, m)` as powers of `q, r, s`, if integral.
    pub fn to_q(&self) -> Option<(i64, i64, i64)> {
        if self.n4 % 4 == 0 && self.l4 % 4 == 0 && self.m4 % 4 == 0 {
            Some((self.n4 / 4, self.l4 / 4, self.m4 / 4))
        } else {
            None
        }
    }

    pub fn scale(&self, k: i64) -> Self {
        ExpTriple::new(self.n4 * k, self.l4 * k, self.m4 * k)
    }

    /// Exchange the roles of `z1` and `z3`.
    pub fn swap_nm(&self) -> Self {
        ExpTriple::new(self.m4, self.l4, self.n4)
    }
}

impl Ord for ExpTriple {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.n4, self.m4, self.l4).cmp(&(o.n4, o.m4, o.l4))
    }
}

impl PartialOrd for ExpTriple {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Add for ExpTriple {
    type Output = ExpTriple;
    fn add(self, o: ExpTriple) -> ExpTriple {
        ExpTriple::new(self.n4 + o.n4, self.l4 + o.l4, self.m4 + o.m4)
    }
}

impl Sub for ExpTriple {
    type Output = ExpTriple;
    fn sub(self, o: ExpTriple) -> ExpTriple {
        ExpTriple::new(self.n4 - o.n4, self.l4 - o.l4, self.m4 - o.m4)
    }
}

impl fmt::Display for ExpTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})/4", self.n4, self.l4, self.m4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LBound {
    AllAdmissible,
    Explicit(i64),
}

/// Truncation box: `n4 ≤ nmax4`, `m4 ≤ mmax4`, optional `|l4| ≤ lmax4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncRegion {
    pub nmax4: i64,
    pub mmax4: i64,
    pub lbound: LBound,
}

impl TruncRegion {
    pub const fn new(nmax4: i64, mmax4: i64) -> Self {
        TruncRegion { nmax4, mmax4, lbound: LBound::AllAdmissible }
    }

    pub const fn square(order4: i64) -> Self {
        Self::new(order4, order4)
    }

    pub const fn exact() -> Self {
        Self::new(UNBOUNDED, UNBOUNDED)
    }

    pub fn is_exact(&self) -> bool {
        self.nmax4 >= UNBOUNDED && self.mmax4 >= UNBOUNDED
    }

    pub fn with_lmax4(mut self, lmax4: i64) -> Self {
        self.lbound = LBound::Explicit(lmax4);
        self
    }

    pub fn contains(&self, e: &ExpTriple) -> bool {
        e.n4 <= self.nmax4
            && e.m4 <= self.mmax4
            && match self.lbound {
                LBound::AllAdmissible => true,
                LBound::Explicit(l) => e.l4.abs() <= l,
            }
    }

    pub fn intersect(&self, o: &TruncRegion) -> TruncRegion {
        let lbound = match (self.lbound, o.lbound) {
            (LBound::AllAdmissible, b) | (b, LBound::AllAdmissible) => b,
            (LBound::Explicit(a), LBound::Explicit(b)) => LBound::Explicit(a.min(b)),
        };
        TruncRegion { nmax4: self.nmax4.min(o.nmax4), mmax4: self.mmax4.min(o.mmax4), lbound }
    }

    /// `self ⊆ o`.
    pub fn within(&self, o: &TruncRegion) -> bool {
        let l_ok = match (self.lbound, o.lbound) {
            (_, LBound::AllAdmissible) => true,
            (LBound::AllAdmissible, LBound::Explicit(_)) => false,
            (LBound::Explicit(a), LBound::Explicit(b)) => a <= b,
        };
        self.nmax4 <= o.nmax4 && self.mmax4 <= o.mmax4 && l_ok
    }

    /// Shift the box by a monomial exponent.
    pub fn shifted(&self, e: &ExpTriple) -> TruncRegion {
        TruncRegion {
            nmax4: cap(self.nmax4 + e.n4),
            mmax4: cap(self.mmax4 + e.m4),
            lbound: self.lbound,
        }
    }
}

fn cap(v: i64) -> i64 {
    v.min(UNBOUNDED)
}

/// First differing coefficient found by [`series_equal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub at: ExpTriple,
    pub left: GaussInt,
    pub right: GaussInt,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {} vs {}", self.at, self.left, self.right)
    }
}

/// Truncated three-variable Fourier expansion with Gaussian-integer
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierSeries3 {
    coeffs: BTreeMap<ExpTriple, GaussInt>,
    region: TruncRegion,
}

type Block = (i64, Vec<(i64, i64, GaussInt)>);

impl FourierSeries3 {
    pub fn zero(region: TruncRegion) -> Self {
        FourierSeries3 { coeffs: BTreeMap::new(), region }
    }

    pub fn one(region: TruncRegion) -> Self {
        Self::monomial(ExpTriple::default(), GaussInt::one(), region)
    }

    pub fn monomial(e: ExpTriple, c: GaussInt, region: TruncRegion) -> Self {
        let mut s = Self::zero(region);
        s.add_term(e, &c);
        s
    }

    /// Sum of terms; duplicates add, terms outside `region` are dropped.
    pub fn from_terms<I>(terms: I, region: TruncRegion) -> Self
    where
        I: IntoIterator<Item = (ExpTriple, GaussInt)>,
    {
        let mut s = Self::zero(region);
        for (e, c) in terms {
            s.add_term(e, &c);
        }
        s
    }

    /// Convenience for exact polynomials with small integer coefficients.
    pub fn poly(terms: &[(ExpTriple, i64)]) -> Self {
        Self::from_terms(terms.iter().map(|(e, c)| (*e, GaussInt::real(*c))), TruncRegion::exact())
    }

    pub fn region(&self) -> TruncRegion {
        self.region
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ExpTriple, &GaussInt)> {
        self.coeffs.iter()
    }

    pub fn get(&self, e: &ExpTriple) -> Option<&GaussInt> {
        self.coeffs.get(e)
    }

    pub fn coeff(&self, e: &ExpTriple) -> GaussInt {
        self.coeffs.get(e).cloned().unwrap_or_default()
    }

    /// Real coefficient at `e`; panics on a non-real coefficient.
    pub fn coeff_real(&self, e: &ExpTriple) -> BigInt {
        let c = self.coeff(e);
        assert!(c.is_real(), "non-real coefficient at {e}");
        c.re
    }

    pub fn add_term(&mut self, e: ExpTriple, c: &GaussInt) {
        if c.is_zero() || !self.region.contains(&e) {
            return;
        }
        match self.coeffs.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.values().all(GaussInt::is_real)
    }

    /// Largest power of two (1, 2 or 4) dividing every stored exponent
    /// component; 4 means the series lives on integral `q, r, s` powers.
    pub fn unit_check(&self) -> i64 {
        let g = self
            .coeffs
            .keys()
            .fold(0i64, |g, e| g.gcd(&e.n4).gcd(&e.l4).gcd(&e.m4));
        if g == 0 || g % 4 == 0 {
            4
        } else if g % 2 == 0 {
            2
        } else {
            1
        }
    }

    pub fn min_n4(&self) -> Option<i64> {
        self.coeffs.keys().next().map(|e| e.n4)
    }

    pub fn min_m4(&self) -> Option<i64> {
        self.coeffs.keys().map(|e| e.m4).min()
    }

    pub fn max_n4(&self) -> Option<i64> {
        self.coeffs.keys().next_back().map(|e| e.n4)
    }

    pub fn max_m4(&self) -> Option<i64> {
        self.coeffs.keys().map(|e| e.m4).max()
    }

    /// Valuations used to propagate truncation through products: the least
    /// stored exponent, or one step past the box when nothing is stored.
    fn valuations(&self) -> (i64, i64) {
        (
            self.min_n4().unwrap_or(self.region.nmax4.saturating_add(1)),
            self.min_m4().unwrap_or(self.region.mmax4.saturating_add(1)),
        )
    }

    /// Truncation box of `self · o`: a coefficient of the product is known
    /// when no unknown coefficient of either factor can reach it.
    pub fn product_region(&self, o: &FourierSeries3) -> TruncRegion {
        let (va, wa) = self.valuations();
        let (vb, wb) = o.valuations();
        let n = cap((self.region.nmax4 + vb.min(UNBOUNDED)).min(o.region.nmax4 + va.min(UNBOUNDED)));
        let m = cap((self.region.mmax4 + wb.min(UNBOUNDED)).min(o.region.mmax4 + wa.min(UNBOUNDED)));
        let lbound = self.region.intersect(&o.region).lbound;
        TruncRegion { nmax4: n, mmax4: m, lbound }
    }

    /// Restrict to a smaller box.
    pub fn restrict(&self, region: TruncRegion) -> Result<FourierSeries3, FourierError> {
        if !region.within(&self.region) {
            return Err(FourierError::RegionTooLarge { requested: region, available: self.region });
        }
        Ok(self.truncate(region))
    }

    /// Drop terms outside `region` and adopt the intersection as the box.
    pub fn truncate(&self, region: TruncRegion) -> FourierSeries3 {
        let region = region.intersect(&self.region);
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(e, _)| region.contains(e))
            .map(|(e, c)| (*e, c.clone()))
            .collect();
        FourierSeries3 { coeffs, region }
    }

    /// Multiply by the monomial `c·e` exactly; the box moves with it.
    pub fn shift(&self, e: ExpTriple, c: &GaussInt) -> FourierSeries3 {
        let region = self.region.shifted(&e);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, v)| (*k + e, v.mul_ref(c)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        FourierSeries3 { coeffs, region }
    }

    pub fn neg(&self) -> FourierSeries3 {
        FourierSeries3 {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c)).collect(),
            region: self.region,
        }
    }

    pub fn scale(&self, k: &GaussInt) -> FourierSeries3 {
        if k.is_zero() {
            return Self::zero(self.region);
        }
        FourierSeries3 {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, c.mul_ref(k))).collect(),
            region: self.region,
        }
    }

    pub fn scale_int(&self, k: &BigInt) -> FourierSeries3 {
        self.scale(&GaussInt::from(k.clone()))
    }

    /// Exact division of every coefficient by `k`.
    pub fn div_exact(&self, k: &BigInt) -> Option<FourierSeries3> {
        let mut coeffs = BTreeMap::new();
        for (e, c) in &self.coeffs {
            coeffs.insert(*e, c.div_exact(k)?);
        }
        Some(FourierSeries3 { coeffs, region: self.region })
    }

    /// gcd of all coefficient parts (0 for the zero series).
    pub fn content(&self) -> BigInt {
        self.coeffs.values().fold(BigInt::zero(), |g, c| g.gcd(&c.content()))
    }

    pub fn add(&self, o: &FourierSeries3) -> FourierSeries3 {
        let region = self.region.intersect(&o.region);
        let mut out = self.truncate(region);
        for (e, c) in &o.coeffs {
            out.add_term(*e, c);
        }
        out
    }

    pub fn sub(&self, o: &FourierSeries3) -> FourierSeries3 {
        let region = self.region.intersect(&o.region);
        let mut out = self.truncate(region);
        for (e, c) in &o.coeffs {
            out.add_term(*e, &-c);
        }
        out
    }

    fn blocks(&self) -> Vec<Block> {
        let mut out: Vec<Block> = Vec::new();
        for (e, c) in &self.coeffs {
            match out.last_mut() {
                Some((n, v)) if *n == e.n4 => v.push((e.m4, e.l4, c.clone())),
                _ => out.push((e.n4, vec![(e.m4, e.l4, c.clone())])),
            }
        }
        out
    }

    /// Truncated product; output blocks of fixed `n4` are computed in
    /// parallel and the sums are exact, so the result does not depend on
    /// the split.
    pub fn mul(&self, o: &FourierSeries3) -> FourierSeries3 {
        assert!(
            self.region.lbound == LBound::AllAdmissible && o.region.lbound == LBound::AllAdmissible,
            "explicit l-bounds are comparison filters and cannot enter products"
        );
        let region = self.product_region(o);
        if self.is_empty() || o.is_empty() {
            return Self::zero(region);
        }
        let a = self.blocks();
        let b = o.blocks();
        let b_index: HashMap<i64, usize> = b.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
        let targets: BTreeSet<i64> = a
            .iter()
            .flat_map(|(na, _)| b.iter().map(move |(nb, _)| na + nb))
            .filter(|n| *n <= region.nmax4)
            .collect();
        let targets: Vec<i64> = targets.into_iter().collect();
        let rows: Vec<Vec<(ExpTriple, GaussInt)>> = targets
            .par_iter()
            .map(|&n| {
                let mut acc: BTreeMap<(i64, i64), GaussInt> = BTreeMap::new();
                for (na, ablk) in &a {
                    if let Some(&j) = b_index.get(&(n - na)) {
                        convolve(ablk, &b[j].1, region.mmax4, &mut acc);
                    }
                }
                acc.into_iter()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|((m4, l4), c)| (ExpTriple::new(n, l4, m4), c))
                    .filter(|(e, _)| region.contains(e))
                    .collect()
            })
            .collect();
        let coeffs = rows.into_iter().flatten().collect();
        FourierSeries3 { coeffs, region }
    }

    pub fn pow(&self, k: u32) -> FourierSeries3 {
        let mut result = FourierSeries3::one(self.region);
        let mut base = self.clone();
        let mut k = k;
        let mut first = true;
        while k > 0 {
            if k & 1 == 1 {
                result = if first { base.clone() } else { result.mul(&base) };
                first = false;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Product of many factors, multiplied in a balanced tree.
    pub fn product(factors: Vec<FourierSeries3>, region: TruncRegion) -> FourierSeries3 {
        let mut layer = factors;
        if layer.is_empty() {
            return FourierSeries3::one(region);
        }
        while layer.len() > 1 {
            layer = layer
                .par_chunks(2)
                .map(|c| if c.len() == 2 { c[0].mul(&c[1]) } else { c[0].clone() })
                .collect();
        }
        layer.pop().unwrap().truncate(region)
    }

    /// Coefficients of `s^{m4/4}` as a map `(n4, l4) → c`.
    pub fn s_block(&self, m4: i64) -> BTreeMap<(i64, i64), GaussInt> {
        self.coeffs
            .iter()
            .filter(|(e, _)| e.m4 == m4)
            .map(|(e, c)| ((e.n4, e.l4), c.clone()))
            .collect()
    }

    /// Image under `z1 ↔ z3`.
    pub fn swap_nm(&self) -> FourierSeries3 {
        FourierSeries3 {
            coeffs: self.coeffs.iter().map(|(e, c)| (e.swap_nm(), c.clone())).collect(),
            region: TruncRegion {
                nmax4: self.region.mmax4,
                mmax4: self.region.nmax4,
                lbound: self.region.lbound,
            },
        }
    }

    pub(crate) fn from_map(coeffs: BTreeMap<ExpTriple, GaussInt>, region: TruncRegion) -> Self {
        debug_assert!(coeffs.iter().all(|(e, c)| region.contains(e) && !c.is_zero()));
        FourierSeries3 { coeffs, region }
    }

    pub fn into_map(self) -> BTreeMap<ExpTriple, GaussInt> {
        self.coeffs
    }
}

fn convolve(
    a: &[(i64, i64, GaussInt)],
    b: &[(i64, i64, GaussInt)],
    mmax4: i64,
    acc: &mut BTreeMap<(i64, i64), GaussInt>,
) {
    for (ma, la, ca) in a {
        let limit = mmax4 - ma;
        for (mb, lb, cb) in b {
            if *mb > limit {
                break;
            }
            acc.entry((ma + mb, la + lb)).or_default().add_mul(ca, cb);
        }
    }
}

/// Compare two series on `region`; `Ok(None)` means equal.
pub fn series_equal(
    a: &FourierSeries3,
    b: &FourierSeries3,
    region: &TruncRegion,
) -> Result<Option<Mismatch>, FourierError> {
    for s in [a, b] {
        if !region.within(&s.region) {
            return Err(FourierError::RegionTooLarge { requested: *region, available: s.region });
        }
    }
    let keys: BTreeSet<&ExpTriple> = a
        .coeffs
        .keys()
        .chain(b.coeffs.keys())
        .filter(|e| region.contains(e))
        .collect();
    for e in keys {
        let x = a.coeff(e);
        let y = b.coeff(e);
        if x != y {
            return Ok(Some(Mismatch { at: *e, left: x, right: y }));
        }
    }
    Ok(None)
}

/// Check `a·den == b·num` on `region`, i.e. `a = (num/den)·b`.
pub fn proportional_on(
    a: &FourierSeries3,
    b: &FourierSeries3,
    num: &GaussInt,
    den: &GaussInt,
    region: &TruncRegion,
) -> Result<Option<Mismatch>, FourierError> {
    let lhs = a.truncate(*region).scale(den);
    let rhs = b.truncate(*region).scale(num);
    series_equal(&lhs, &rhs, &region.intersect(&lhs.region).intersect(&rhs.region))
}

/// Ratio `a/b` read off the least common nonzero coefficient, as a reduced
/// Gaussian fraction `(num, den)` with `den` a positive integer.
pub fn leading_ratio(a: &FourierSeries3, b: &FourierSeries3) -> Option<(GaussInt, BigInt)> {
    let (e, cb) = b.coeffs.iter().next()?;
    let ca = a.coeff(e);
    // ca / cb = ca·conj(cb) / |cb|²
    let num = ca.mul_ref(&cb.conj());
    let den = cb.norm();
    let g = num.content().gcd(&den);
    let g = if g.is_zero() { BigInt::from(1) } else { g };
    let mut num = num.div_exact(&g)?;
    let mut den = den / &g;
    if den.is_negative() {
        num = -num;
        den = -den;
    }
    Some((num, den))
}

type LaurentR = BTreeMap<i64, GaussInt>;

impl FourierSeries3 {
    /// Exact quotient `self / d`.
    ///
    /// `d` needs a term at `(min n4, ·, min m4)`; that lowest block is a
    /// Laurent polynomial in `r` whose top coefficient must be a unit.
    /// Quotient blocks are solved in order of increasing `n4 + m4`.
    pub fn div_series(&self, d: &FourierSeries3) -> Result<FourierSeries3, FourierError> {
        let (dn, dm) = match (d.min_n4(), d.min_m4()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(FourierError::NotDivisible("zero divisor".into())),
        };
        let mut dblocks: BTreeMap<(i64, i64), LaurentR> = BTreeMap::new();
        for (e, c) in &d.coeffs {
            dblocks.entry((e.n4 - dn, e.m4 - dm)).or_default().insert(e.l4, c.clone());
        }
        let lead = dblocks
            .remove(&(0, 0))
            .ok_or_else(|| FourierError::NotDivisible(format!("no divisor term at n4={dn}, m4={dm}")))?;
        let (&ltop, u) = lead.iter().next_back().expect("nonempty block");
        if u.norm() != BigInt::from(1) {
            return Err(FourierError::NotDivisible(format!("leading coefficient {u} is not a unit")));
        }
        let u_inv = u.conj();
        let lbot = *lead.keys().next().expect("nonempty block");

        let mut ablocks: BTreeMap<(i64, i64), LaurentR> = BTreeMap::new();
        for (e, c) in &self.coeffs {
            ablocks.entry((e.n4 - dn, e.m4 - dm)).or_default().insert(e.l4, c.clone());
        }
        let Some((qn0, qm0)) = self.min_n4().zip(self.min_m4()).map(|(a, b)| (a - dn, b - dm)) else {
            let region = TruncRegion { nmax4: cap(self.region.nmax4 - dn), mmax4: cap(self.region.mmax4 - dm), lbound: self.region.lbound };
            return Ok(Self::zero(region));
        };
        // the quotient's block (n, m) needs divisor blocks up to (n - qn0, m - qm0)
        let nmax = cap((self.region.nmax4 - dn).min(d.region.nmax4 - dn + qn0));
        let mmax = cap((self.region.mmax4 - dm).min(d.region.mmax4 - dm + qm0));
        if nmax >= UNBOUNDED || mmax >= UNBOUNDED {
            return Err(FourierError::NotDivisible("quotient box is unbounded".into()));
        }
        let step = |xs: &mut dyn Iterator<Item = i64>| xs.fold(0i64, |g, x| g.gcd(&x)).max(1);
        let gn = step(&mut ablocks.keys().map(|k| k.0 - qn0).chain(dblocks.keys().map(|k| k.0)));
        let gm = step(&mut ablocks.keys().map(|k| k.1 - qm0).chain(dblocks.keys().map(|k| k.1)));

        let mut order: Vec<(i64, i64)> = Vec::new();
        let mut n = qn0;
        while n <= nmax {
            let mut m = qm0;
            while m <= mmax {
                order.push((n, m));
                m += gm;
            }
            n += gn;
        }
        order.sort_by_key(|&(n, m)| (n + m, n));

        let mut q: BTreeMap<(i64, i64), LaurentR> = BTreeMap::new();
        for (n, m) in order {
            let mut rem = ablocks.remove(&(n, m)).unwrap_or_default();
            for ((i, j), db) in &dblocks {
                if let Some(qb) = q.get(&(n - i, m - j)) {
                    for (l1, c1) in db {
                        for (l2, c2) in qb {
                            let e = rem.entry(l1 + l2).or_insert_with(GaussInt::zero);
                            *e -= &c1.mul_ref(c2);
                        }
                    }
                }
            }
            rem.retain(|_, c| !c.is_zero());
            let mut out = LaurentR::new();
            while let Some((&top, c)) = rem.iter().next_back() {
                let low = *rem.keys().next().expect("nonempty");
                if top - ltop < low - lbot {
                    return Err(FourierError::NotDivisible(format!("remainder in block n4={}, m4={}", n + dn, m + dm)));
                }
                let k = top - ltop;
                let t = c.mul_ref(&u_inv);
                for (l, v) in &lead {
                    let e = rem.entry(l + k).or_insert_with(GaussInt::zero);
                    *e -= &v.mul_ref(&t);
                }
                rem.retain(|_, c| !c.is_zero());
                out.insert(k, t);
            }
            if !out.is_empty() {
                q.insert((n, m), out);
            }
        }
        let region = TruncRegion { nmax4: nmax, mmax4: mmax, lbound: self.region.lbound };
        let terms = q.into_iter().flat_map(|((n, m), b)| b.into_iter().map(move |(l, c)| (ExpTriple::new(n, l, m), c)));
        Ok(Self::from_terms(terms, region))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u() -> ExpTriple {
        ExpTriple::from_q(1, 1, 1)
    }

    #[test]
    fn div_series_undoes_mul() {
        let region = TruncRegion::new(24, 24);
        let d = FourierSeries3::from_terms(
            [
                (ExpTriple::new(2, 2, 2), GaussInt::one()),
                (ExpTriple::new(2, -2, 2), -GaussInt::one()),
                (ExpTriple::new(6, 0, 2), GaussInt::new(3, 1)),
                (ExpTriple::new(2, 4, 10), GaussInt::real(-2)),
            ],
            region,
        );
        let a = FourierSeries3::from_terms(
            [
                (ExpTriple::new(0, 0, 0), GaussInt::new(0, 1)),
                (ExpTriple::new(4, 1, 0), GaussInt::real(5)),
                (ExpTriple::new(4, -3, 8), GaussInt::real(-7)),
            ],
            region,
        );
        let prod = a.mul(&d);
        let back = prod.div_series(&d).unwrap();
        assert_eq!(back, a.truncate(back.region()));
        assert!(back.region().nmax4 >= 16);
        // a non-multiple leaves a remainder
        let bad = prod.add(&FourierSeries3::monomial(ExpTriple::new(2, 7, 2), GaussInt::one(), region));
        assert!(matches!(bad.div_series(&d), Err(FourierError::NotDivisible(_))));
    }

    #[test]
    fn add_inverse_is_empty() {
        let x = FourierSeries3::poly(&[(u(), 3), (ExpTriple::from_q(0, 1, 0), -2)]);
        assert!(x.add(&x.neg()).is_empty());
    }

    #[test]
    fn one_plus_one() {
        let one = FourierSeries3::poly(&[(ExpTriple::default(), 1)]);
        let two = one.add(&one);
        assert_eq!(two.len(), 1);
        assert_eq!(two.coeff(&ExpTriple::default()), GaussInt::real(2));
    }

    #[test]
    fn disjoint_support() {
        let a = FourierSeries3::poly(&[(ExpTriple::new(2, 0, 0), 1)]);
        let b = FourierSeries3::poly(&[(ExpTriple::new(0, 2, 0), 1)]);
        let s = a.add(&b);
        let keys: Vec<_> = s.iter().map(|(e, _)| *e).collect();
        assert_eq!(keys, vec![ExpTriple::new(0, 2, 0), ExpTriple::new(2, 0, 0)]);
    }

    #[test]
    fn difference_of_squares() {
        let a = FourierSeries3::poly(&[(ExpTriple::default(), 1), (u(), -1)]);
        let b = FourierSeries3::poly(&[(ExpTriple::default(), 1), (u(), 1)]);
        let expect = FourierSeries3::poly(&[(ExpTriple::default(), 1), (u().scale(2), -1)]);
        assert_eq!(a.mul(&b), expect);
    }

    #[test]
    fn powers() {
        let a = FourierSeries3::poly(&[(ExpTriple::default(), 1), (u(), -1)]);
        assert_eq!(a.pow(0), FourierSeries3::one(a.region()));
        assert_eq!(a.pow(1), a);
        let sq = FourierSeries3::poly(&[(ExpTriple::default(), 1), (u(), -2), (u().scale(2), 1)]);
        assert_eq!(a.pow(2), sq);
    }

    #[test]
    fn truncation_follows_valuations() {
        let region = TruncRegion::square(8);
        // a = q^{-1}, known exactly; b = 1 + q + q² truncated at n4 ≤ 8
        let a = FourierSeries3::poly(&[(ExpTriple::from_q(-1, 0, 0), 1)]);
        let b = FourierSeries3::from_terms(
            (0..3).map(|k| (ExpTriple::from_q(k, 0, 0), GaussInt::one())),
            region,
        );
        let p = a.mul(&b);
        assert_eq!(p.region().nmax4, 4);
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn mismatch_witness_is_least() {
        let x = FourierSeries3::poly(&[(ExpTriple::default(), 1)]);
        let y = x.add(&FourierSeries3::poly(&[(u(), 5), (u().scale(2), 1)]));
        let r = TruncRegion::square(16);
        assert_eq!(series_equal(&x, &x, &r).unwrap(), None);
        let m = series_equal(&x, &y, &r).unwrap().unwrap();
        assert_eq!(m.at, u());
        assert_eq!(m.right, GaussInt::real(5));
        let small = x.truncate(TruncRegion::square(4));
        assert!(series_equal(&small, &x, &r).is_err());
    }
}
