use super::tables::{ExponentTable, IndexRule};
use super::BorcherdsError;
use crate::fourier::{ExpTriple, FourierSeries3, GaussInt, TruncRegion, UNBOUNDED};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Which factors `(1 − qⁿrˡsᵐ)` a product runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeRule {
    /// `n, m ≥ 0`; `l < 0` when `n = m = 0`.
    PositiveCone,
    /// `m ≥ 0`, any `l`, `(n, m) ≠ (0, 0)`.
    MGeZero,
    /// `m > 0` with any `n`, or `m = 0` and `n > 0`; any `l`. Drops the
    /// `m = 0, n < 0` factors that make `MGeZero` diverge.
    MGeZeroConvergent,
    /// `n, m ≥ 0`, `n + m > 0`, any `l`.
    B1,
    /// Whatever an explicit triple table lists.
    Listed,
}

impl RangeRule {
    pub fn admits(&self, n: i64, l: i64, m: i64) -> bool {
        match self {
            RangeRule::PositiveCone => n >= 0 && m >= 0 && (n + m > 0 || l < 0),
            RangeRule::MGeZero => m >= 0 && (n != 0 || m != 0),
            RangeRule::MGeZeroConvergent => m > 0 || (m == 0 && n > 0),
            RangeRule::B1 => n >= 0 && m >= 0 && n + m > 0,
            RangeRule::Listed => n != 0 || l != 0 || m != 0,
        }
    }
}

/// `weyl · ∏ (1 − qⁿrˡsᵐ)^{e(n,l,m)}` over the range rule.
#[derive(Clone, Debug)]
pub struct ProductSpec {
    pub weyl: FourierSeries3,
    pub table: ExponentTable,
    pub index_rule: IndexRule,
    pub range_rule: RangeRule,
}

/// One factor `(1 − u)^e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub n: i64,
    pub l: i64,
    pub m: i64,
    pub exponent: BigInt,
}

impl Factor {
    fn monomial(&self) -> ExpTriple {
        ExpTriple::from_q(self.n, self.l, self.m)
    }
}

/// Binomial coefficients of `(1 − u)^e` up to `u^jmax`.
fn binomial_row(e: &BigInt, jmax: i64) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    let mut c = BigInt::one();
    for j in 1..=jmax {
        // c_j = c_{j-1} · (−(e − j + 1)) / j
        c *= -(e - BigInt::from(j - 1));
        let (q, r) = c.div_rem(&BigInt::from(j));
        debug_assert!(r.is_zero());
        c = q;
        out.push(c.clone());
    }
    out
}

/// Multiply `p` by `(1 − u)^e` inside `p`'s box. The monomial `u` must not
/// lower either bounded coordinate, so no truncated term can re-enter.
pub fn mul_factor(p: &FourierSeries3, f: &Factor) -> Result<FourierSeries3, BorcherdsError> {
    if f.exponent.is_zero() || p.is_empty() {
        return Ok(p.clone());
    }
    let u = f.monomial();
    let region = p.region();
    let n_bounded = region.nmax4 < UNBOUNDED;
    let m_bounded = region.mmax4 < UNBOUNDED;
    if (n_bounded && u.n4 < 0) || (m_bounded && u.m4 < 0) {
        return Err(BorcherdsError::DivergentFactor { n: f.n, l: f.l, m: f.m });
    }
    let mut jmax = i64::MAX;
    if u.n4 > 0 && n_bounded {
        jmax = jmax.min((region.nmax4 - p.min_n4().unwrap()) / u.n4);
    }
    if u.m4 > 0 && m_bounded {
        jmax = jmax.min((region.mmax4 - p.min_m4().unwrap()) / u.m4);
    }
    if f.exponent.is_positive() {
        jmax = jmax.min(f.exponent.to_i64().unwrap_or(i64::MAX));
    } else if jmax == i64::MAX {
        return Err(BorcherdsError::DivergentFactor { n: f.n, l: f.l, m: f.m });
    }
    let b = binomial_row(&f.exponent, jmax);
    let terms: Vec<(ExpTriple, GaussInt)> = p.iter().map(|(e, c)| (*e, c.clone())).collect();
    let mut out = p.clone();
    for (j, bj) in b.iter().enumerate().skip(1) {
        if bj.is_zero() {
            continue;
        }
        let shift = u.scale(j as i64);
        for (e, c) in &terms {
            let y = *e + shift;
            if region.contains(&y) {
                out.add_term(y, &c.scale(bj));
            }
        }
    }
    Ok(out)
}

/// Multiply by all factors of one `(n, m)` block at once, working row by
/// row in parallel.
fn mul_block(p: &FourierSeries3, fs: &[Factor]) -> Result<FourierSeries3, BorcherdsError> {
    if fs.len() < 4 {
        let mut out = p.clone();
        for f in fs {
            out = mul_factor(&out, f)?;
        }
        return Ok(out);
    }
    // expand the block into a series in the block variable, then multiply
    let mut block = FourierSeries3::one(p.region().shifted(&ExpTriple::new(
        -p.min_n4().unwrap_or(0),
        0,
        -p.min_m4().unwrap_or(0),
    )));
    for f in fs {
        block = mul_factor(&block, f)?;
    }
    Ok(p.mul(&block))
}

impl ProductSpec {
    /// Factors with nonzero exponent whose monomial has `m4 ≤ mmax4` and
    /// `n` within `[nlo, nhi]` (powers of `q`).
    fn factors(&self, nlo: i64, nhi: i64, mmax: i64) -> Result<Vec<Factor>, BorcherdsError> {
        if let ExponentTable::Triple(t) = &self.table {
            if nhi > t.nmax || mmax > t.mmax {
                return Err(BorcherdsError::InsufficientFRange { need: nhi.max(mmax), have: t.nmax.min(t.mmax) });
            }
        }
        let mut out = Vec::new();
        for m in 0..=mmax {
            for n in nlo..=nhi {
                if !(self.range_rule.admits(n, 0, m) || (n == 0 && m == 0)) {
                    continue;
                }
                for l in self.table.l_candidates(self.index_rule, n, m)? {
                    if !self.range_rule.admits(n, l, m) {
                        continue;
                    }
                    let e = self.table.exponent(self.index_rule, n, l, m)?;
                    if !e.is_zero() {
                        out.push(Factor { n, l, m, exponent: e });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Factors with `m = 0`, `n < 0` carry an exponent independent of `n`
    /// for discriminant and pair tables; any nonzero one means infinitely
    /// many factors with unbounded negative `q`-power.
    fn check_divergence(&self) -> Result<(), BorcherdsError> {
        if self.range_rule != RangeRule::MGeZero || matches!(self.table, ExponentTable::Triple(_)) {
            if let ExponentTable::Triple(t) = &self.table {
                for ((n, l, m), e) in t.iter() {
                    if *n < 0 && *m == 0 && !e.is_zero() {
                        return Err(BorcherdsError::DivergentFactor { n: *n, l: *l, m: *m });
                    }
                }
            }
            return Ok(());
        }
        for l in self.table.l_candidates(self.index_rule, -1, 0)? {
            if !self.table.exponent(self.index_rule, -1, l, 0)?.is_zero() {
                return Err(BorcherdsError::DivergentFactor { n: -1, l, m: 0 });
            }
        }
        Ok(())
    }

    fn floor(&self) -> i64 {
        match &self.table {
            ExponentTable::Discriminant(t) => t.floor,
            ExponentTable::Masked { base, sub } => base.floor.min(4 * sub.floor),
            ExponentTable::Pair(t) => t.nmin,
            ExponentTable::Triple(t) => t.iter().map(|((n, _, _), _)| *n).min().unwrap_or(0).min(0),
        }
    }
}

/// Expand the product on `region`.
pub fn eval_product(spec: &ProductSpec, region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    spec.check_divergence()?;
    let wn = spec.weyl.min_n4().unwrap_or(0);
    let wm = spec.weyl.min_m4().unwrap_or(0);
    let np4 = region.nmax4 - wn;
    let mp4 = region.mmax4 - wm;
    let mmax = mp4.div_euclid(4);
    // factors with negative q-power: finite, since m ≥ 1 and the table has a floor
    let nlo = match spec.range_rule {
        RangeRule::MGeZero | RangeRule::MGeZeroConvergent | RangeRule::Listed => {
            let f = spec.floor();
            if f >= 0 {
                0
            } else if matches!(spec.table, ExponentTable::Triple(_)) {
                f
            } else {
                f.div_euclid(4)
            }
        }
        _ => 0,
    };
    let negative = if nlo < 0 { spec.factors(nlo, -1, mmax)? } else { Vec::new() };
    if let Some(f) = negative.iter().find(|f| f.m == 0) {
        return Err(BorcherdsError::DivergentFactor { n: f.n, l: f.l, m: f.m });
    }
    let mut neg = FourierSeries3::one(TruncRegion::new(UNBOUNDED, mp4));
    for f in &negative {
        neg = mul_neg_factor(&neg, f)?;
    }
    let vneg = neg.min_n4().unwrap_or(0).min(0);
    let np4_pos = np4 - vneg;
    let positive = spec.factors(0, np4_pos.div_euclid(4), mmax)?;
    let mut blocks: BTreeMap<(i64, i64), Vec<Factor>> = BTreeMap::new();
    for f in positive {
        blocks.entry((f.n + f.m, f.n)).or_default().push(f);
    }
    let mut p = FourierSeries3::one(TruncRegion::new(np4_pos, mp4));
    // r-only factors first: together they are an exact polynomial
    let mut rest: Vec<Vec<Factor>> = Vec::new();
    for ((_, _), fs) in blocks {
        if fs[0].n == 0 && fs[0].m == 0 {
            p = p.mul(&r_block(&fs, p.region())?);
        } else {
            rest.push(fs);
        }
    }
    // multiply blocks pairwise in a balanced tree of partial products
    let partials: Vec<Result<FourierSeries3, BorcherdsError>> = rest
        .par_chunks(rest.len().div_ceil(rayon::current_num_threads().max(1)).max(1))
        .map(|chunk| {
            let mut acc = FourierSeries3::one(TruncRegion::new(np4_pos, mp4));
            for fs in chunk {
                acc = mul_block(&acc, fs)?;
            }
            Ok(acc)
        })
        .collect();
    let mut layer: Vec<FourierSeries3> = vec![p];
    for r in partials {
        layer.push(r?);
    }
    let p = FourierSeries3::product(layer, TruncRegion::new(np4_pos, mp4));
    let p = neg.mul(&p);
    Ok(spec.weyl.mul(&p).truncate(region))
}

/// `∏ (1 − r^{l})^{e}` over factors with `l < 0`. Single factors with
/// `e < 0` are infinite series; the block is accepted when the whole
/// product closes up into a polynomial in `r⁻¹`.
fn r_block(fs: &[Factor], region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    let bad = |f: &Factor| BorcherdsError::DivergentFactor { n: f.n, l: f.l, m: f.m };
    if let Some(f) = fs.iter().find(|f| f.l >= 0) {
        return Err(bad(f));
    }
    let deg = |f: &Factor| -> Result<usize, BorcherdsError> {
        let e = f.exponent.abs().to_usize().ok_or_else(|| bad(f))?;
        Ok((-f.l) as usize * e)
    };
    // x = r⁻¹; numerator and denominator degrees
    let mut top = 0usize;
    let mut below = 0usize;
    for f in fs {
        if f.exponent.is_positive() {
            top += deg(f)?;
        } else {
            below += deg(f)?;
        }
    }
    let mul_into = |c: &mut Vec<BigInt>, k: usize, e: &BigInt, len: usize| {
        let b = binomial_row(e, (len / k) as i64);
        let mut out = vec![BigInt::zero(); len];
        for (i, ci) in c.iter().enumerate().filter(|(_, ci)| !ci.is_zero()) {
            for (j, bj) in b.iter().enumerate() {
                if i + j * k < len {
                    out[i + j * k] += ci * bj;
                }
            }
        }
        *c = out;
    };
    let mut series = vec![BigInt::zero(); top + 1];
    series[0] = BigInt::one();
    for f in fs {
        mul_into(&mut series, (-f.l) as usize, &f.exponent, top + 1);
    }
    // series · ∏_{e<0} (1 − x^k)^{|e|} must reproduce ∏_{e>0} (1 − x^k)^e
    let len = top + below + 1;
    let mut lhs = series.clone();
    lhs.resize(len, BigInt::zero());
    let mut rhs = vec![BigInt::zero(); len];
    rhs[0] = BigInt::one();
    for f in fs {
        let k = (-f.l) as usize;
        if f.exponent.is_positive() {
            mul_into(&mut rhs, k, &f.exponent, len);
        } else {
            mul_into(&mut lhs, k, &-&f.exponent, len);
        }
    }
    if lhs != rhs {
        return Err(bad(fs.iter().find(|f| f.exponent.is_negative()).unwrap_or(&fs[0])));
    }
    let terms = series
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(j, c)| (ExpTriple::new(0, -4 * j as i64, 0), GaussInt::from(c)));
    Ok(FourierSeries3::from_terms(terms, region))
}

/// `(1 − u)^e` for `u` with `n < 0 < m`, expanded up to the `m`-bound of an
/// `n`-exact series.
fn mul_neg_factor(p: &FourierSeries3, f: &Factor) -> Result<FourierSeries3, BorcherdsError> {
    let u = f.monomial();
    let region = p.region();
    let jmax = if f.exponent.is_positive() {
        f.exponent.to_i64().unwrap_or(i64::MAX).min((region.mmax4 - p.min_m4().unwrap_or(0)) / u.m4)
    } else {
        (region.mmax4 - p.min_m4().unwrap_or(0)) / u.m4
    };
    let b = binomial_row(&f.exponent, jmax);
    let mut out = FourierSeries3::zero(region);
    for (j, bj) in b.iter().enumerate() {
        let shift = u.scale(j as i64);
        for (e, c) in p.iter() {
            out.add_term(*e + shift, &c.scale(bj));
        }
    }
    Ok(out)
}
