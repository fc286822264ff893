//! Product inversion: read exponents off a series known to be a product.

use super::product::{eval_product, mul_factor, Factor, ProductSpec, RangeRule};
use super::tables::{DiscTable, ExponentTable, IndexRule, PairTable, TripleTable};
use super::BorcherdsError;
use crate::fourier::{series_equal, FourierSeries3, TruncRegion, UNBOUNDED};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Laurent polynomial in `r`, keyed by `l4`.
pub(crate) type Laurent = BTreeMap<i64, BigInt>;

fn lp_mul(a: &Laurent, b: &Laurent) -> Laurent {
    let mut out = Laurent::new();
    for (i, x) in a {
        for (j, y) in b {
            *out.entry(i + j).or_default() += x * y;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn lp_sub_assign(a: &mut Laurent, b: &Laurent) {
    for (k, v) in b {
        *a.entry(*k).or_default() -= v;
    }
    a.retain(|_, c| !c.is_zero());
}

/// Exact quotient `a / b`, worked from the top degree down. `Err(true)`
/// flags a non-integral quotient coefficient, `Err(false)` a remainder.
pub(crate) fn lp_div(a: &Laurent, b: &Laurent) -> Result<Laurent, bool> {
    let (&bt, bc) = b.iter().next_back().expect("nonzero divisor");
    let bb = *b.keys().next().unwrap();
    let mut rem = a.clone();
    let mut q = Laurent::new();
    while let Some((&top, c)) = rem.iter().next_back() {
        // quotient degrees are bounded below by deg_low(a) − deg_low(b)
        if top - bt < rem.keys().next().copied().unwrap_or(top) - bb {
            return Err(false);
        }
        let (qc, r) = c.div_rem(bc);
        if !r.is_zero() {
            return Err(true);
        }
        let shift = top - bt;
        for (k, v) in b {
            *rem.entry(k + shift).or_default() -= &qc * v;
        }
        rem.retain(|_, c| !c.is_zero());
        q.insert(shift, qc);
    }
    Ok(q)
}

/// Exponents recovered block by block, before collapsing to a key rule.
#[derive(Clone, Debug)]
pub struct Recovered {
    /// exponents at `(n, l, m)` in powers of `q, r, s`
    pub triples: TripleTable,
    /// blocks `(n, m)` whose exponents are all known
    pub solved: BTreeSet<(i64, i64)>,
    /// rectangle of the input on which the self-check ran
    pub checked: TruncRegion,
}

/// Split the Weyl factor into `W_j` at `(n4 + 4j, m4 − 4j)`.
fn weyl_blocks(weyl: &FourierSeries3) -> Result<(i64, i64, Vec<Laurent>), BorcherdsError> {
    let mut by_block: BTreeMap<(i64, i64), Laurent> = BTreeMap::new();
    for (e, c) in weyl.iter() {
        let c = c.to_real().ok_or_else(|| BorcherdsError::NotAProduct("complex Weyl factor".into()))?;
        by_block.entry((e.n4, e.m4)).or_default().insert(e.l4, c.clone());
    }
    let degs: BTreeSet<i64> = by_block.keys().map(|(n, m)| n + m).collect();
    if degs.len() != 1 {
        return Err(BorcherdsError::NotAProduct("Weyl factor is not homogeneous in n + m".into()));
    }
    let (&(n0, m0), _) = by_block.iter().next().ok_or_else(|| BorcherdsError::NotAProduct("zero Weyl factor".into()))?;
    let kmax = by_block.keys().map(|(n, _)| n).max().unwrap();
    if (kmax - n0) % 4 != 0 || by_block.keys().any(|(n, _)| (n - n0) % 4 != 0) {
        return Err(BorcherdsError::NotAProduct("Weyl blocks are not spaced by whole powers".into()));
    }
    let k = (kmax - n0) / 4;
    let blocks = (0..=k).map(|j| by_block.remove(&(n0 + 4 * j, m0 - 4 * j)).unwrap_or_default()).collect();
    Ok((n0, m0, blocks))
}

/// Peel `b00 = ∏_{k≥1} (1 − x^k)^{e_k}` with `x = r⁻¹`; requires `e_k ≥ 0`
/// so the product is a polynomial and can be checked exactly.
fn peel_r_block(b00: &Laurent) -> Result<Vec<(i64, BigInt)>, BorcherdsError> {
    let bad = || BorcherdsError::NotAProduct("r-only block is not a product of (1 − r^{-k})".into());
    // as a polynomial in x; l4 = −4k
    let mut x: BTreeMap<i64, BigInt> = BTreeMap::new();
    for (l4, c) in b00 {
        if *l4 > 0 || l4 % 4 != 0 {
            return Err(bad());
        }
        x.insert(-l4 / 4, c.clone());
    }
    if x.get(&0) != Some(&BigInt::one()) {
        return Err(bad());
    }
    let deg = *x.keys().next_back().unwrap();
    let mut exps = Vec::new();
    let mut rest = x.clone();
    for k in 1..=deg {
        let c = rest.get(&k).cloned().unwrap_or_default();
        if c.is_zero() {
            continue;
        }
        let e = -c;
        if e < BigInt::zero() {
            return Err(bad());
        }
        // rest ← rest / (1 − x^k)^e, truncated at deg
        for _ in 0..e.to_string().parse::<u64>().map_err(|_| bad())? {
            for j in k..=deg {
                let prev = rest.get(&(j - k)).cloned().unwrap_or_default();
                *rest.entry(j).or_default() += prev;
            }
        }
        rest.retain(|_, c| !c.is_zero());
        exps.push((k, e));
    }
    // exact verification
    let mut check: BTreeMap<i64, BigInt> = [(0, BigInt::one())].into_iter().collect();
    for (k, e) in &exps {
        for _ in 0..e.to_string().parse::<u64>().unwrap() {
            let mut next = check.clone();
            for (j, c) in &check {
                *next.entry(j + k).or_default() -= c;
            }
            next.retain(|_, c| !c.is_zero());
            check = next;
        }
    }
    if check != x {
        return Err(bad());
    }
    Ok(exps)
}

/// Recover exponents block by block. Blocks `(a, b)` are visited by
/// `a + b`, then `b`; a block is solvable when its target coefficient
/// block lies in the input's box and everything feeding into it is known.
pub fn recover_blocks(
    series: &FourierSeries3,
    weyl: &FourierSeries3,
    range_rule: RangeRule,
) -> Result<Recovered, BorcherdsError> {
    if matches!(range_rule, RangeRule::MGeZero | RangeRule::MGeZeroConvergent | RangeRule::Listed) {
        return Err(BorcherdsError::NotAProduct(
            "recovery with negative q-powers in the range is not supported".into(),
        ));
    }
    if !series.is_real() {
        return Err(BorcherdsError::NotAProduct("series has non-real coefficients".into()));
    }
    let (wn, wm, w) = weyl_blocks(weyl)?;
    let k = w.len() as i64 - 1;
    let pivot = (wn + 4 * k, wm - 4 * k);
    let mut region = series.region();
    if region.nmax4 >= UNBOUNDED {
        region.nmax4 = series.max_n4().unwrap_or(pivot.0).max(pivot.0) + 4;
    }
    if region.mmax4 >= UNBOUNDED {
        region.mmax4 = series.max_m4().unwrap_or(pivot.1).max(pivot.1) + 4;
    }
    let mut sblocks: BTreeMap<(i64, i64), Laurent> = BTreeMap::new();
    for (e, c) in series.iter() {
        if (e.n4 - pivot.0).rem_euclid(4) != 0 || (e.m4 - pivot.1).rem_euclid(4) != 0 {
            return Err(BorcherdsError::NotAProduct(format!("term at {e} off the Weyl lattice")));
        }
        sblocks.entry((e.n4, e.m4)).or_default().insert(e.l4, c.to_real().unwrap().clone());
    }
    let amax = (region.nmax4 - pivot.0).div_euclid(4);
    let bmax = (region.mmax4 - pivot.1).div_euclid(4);
    if amax < 0 || bmax < 0 {
        return Err(BorcherdsError::NotAProduct("region does not reach the Weyl factor".into()));
    }
    let s_at = |a: i64, b: i64| sblocks.get(&(pivot.0 + 4 * a, pivot.1 + 4 * b)).cloned().unwrap_or_default();
    let wk = &w[k as usize];
    // r-only part
    let b00 = lp_div(&s_at(0, 0), wk).map_err(|_| {
        BorcherdsError::NotAProduct("leading block is not divisible by the Weyl factor".into())
    })?;
    let mut triples: BTreeMap<(i64, i64, i64), BigInt> = BTreeMap::new();
    match range_rule {
        RangeRule::B1 => {
            if b00 != [(0, BigInt::one())].into_iter().collect::<Laurent>() {
                return Err(BorcherdsError::NotAProduct("leading block differs from the Weyl factor".into()));
            }
        }
        _ => {
            for (kk, e) in peel_r_block(&b00)? {
                triples.insert((0, -kk, 0), e);
            }
        }
    }
    let divisor = lp_mul(&b00, wk);
    let mut prod = FourierSeries3::one(TruncRegion::new(4 * amax, 4 * bmax));
    let mut q: BTreeMap<(i64, i64), Laurent> = BTreeMap::new();
    q.insert((0, 0), [(0, BigInt::one())].into_iter().collect());
    let mut solved: BTreeSet<(i64, i64)> = BTreeSet::new();
    solved.insert((0, 0));
    for d in 1..=(amax + bmax) {
        for b in 0..=d.min(bmax) {
            let a = d - b;
            if a > amax {
                continue;
            }
            let feeders_ok = (1..=k.min(b)).all(|i| q.contains_key(&(a + i, b - i)))
                && (0..=a).all(|x| (0..=b).all(|y| (x, y) == (a, b) || solved.contains(&(x, y))));
            if !feeders_ok {
                continue;
            }
            let mut dd = s_at(a, b);
            let mut sub = Laurent::new();
            for j in 0..k {
                let i = k - j;
                if b - i < 0 {
                    continue;
                }
                let qb = &q[&(a + i, b - i)];
                for (kk, v) in lp_mul(&w[j as usize], qb) {
                    *sub.entry(kk).or_default() += v;
                }
            }
            sub.retain(|_, c| !c.is_zero());
            lp_sub_assign(&mut dd, &lp_mul(&b00, &sub));
            let qab = if dd.is_empty() {
                Laurent::new()
            } else {
                lp_div(&dd, &divisor).map_err(|nonint| {
                    if nonint {
                        BorcherdsError::NonIntegralExponent(format!("block ({a}, {b})"))
                    } else {
                        BorcherdsError::NotAProduct(format!("block ({a}, {b}) leaves a remainder"))
                    }
                })?
            };
            // new exponents: Q_ab = P_ab − Σ e(l) r^l
            let mut p_ab: Laurent = Laurent::new();
            for (e, c) in prod.iter() {
                if e.n4 == 4 * a && e.m4 == 4 * b {
                    p_ab.insert(e.l4, c.to_real().unwrap().clone());
                }
            }
            lp_sub_assign(&mut p_ab, &qab);
            for (l4, e) in &p_ab {
                if l4 % 4 != 0 {
                    return Err(BorcherdsError::NotAProduct(format!("fractional r-power in block ({a}, {b})")));
                }
                if !range_rule.admits(a, l4 / 4, b) {
                    return Err(BorcherdsError::NotAProduct(format!("factor ({a}, {}, {b}) outside the range", l4 / 4)));
                }
                triples.insert((a, l4 / 4, b), e.clone());
                prod = mul_factor(&prod, &Factor { n: a, l: l4 / 4, m: b, exponent: e.clone() })?;
            }
            q.insert((a, b), qab);
            solved.insert((a, b));
        }
    }
    // largest rectangle of solved blocks
    let mut best = (0i64, 0i64, 0i64);
    for bb in 0..=bmax {
        let mut aa = -1;
        while aa < amax && (0..=bb).all(|y| solved.contains(&(aa + 1, y))) {
            aa += 1;
        }
        if aa >= 0 && (aa + 1) * (bb + 1) > best.0 {
            best = ((aa + 1) * (bb + 1), aa, bb);
        }
    }
    let checked = TruncRegion::new(wn + 4 * best.1, pivot.1 + 4 * best.2);
    let triples = TripleTable::new(triples, amax, bmax);
    let spec = ProductSpec {
        weyl: weyl.clone(),
        table: ExponentTable::Triple(restrict_triples(&triples, &solved)),
        index_rule: IndexRule::Discriminant,
        range_rule,
    };
    let rebuilt = eval_product(&spec, checked)?;
    let check_region = checked.intersect(&region);
    if let Some(mm) = series_equal(&rebuilt.truncate(check_region), &series.truncate(check_region), &check_region)? {
        return Err(BorcherdsError::NotAProduct(format!("self-check failed: {mm}")));
    }
    Ok(Recovered { triples, solved, checked })
}

fn restrict_triples(t: &TripleTable, solved: &BTreeSet<(i64, i64)>) -> TripleTable {
    TripleTable::new(
        t.iter().filter(|((n, _, m), _)| solved.contains(&(*n, *m))).map(|(k, v)| (*k, v.clone())).collect(),
        t.nmax,
        t.mmax,
    )
}

impl Recovered {
    /// Collapse to `N = 4nm − l² ↦ e`, checking that the exponent depends
    /// only on `N`. The known range ends below the least `N ≡ 0, 3 mod 4`
    /// that no solved block reaches.
    pub fn to_disc(&self) -> Result<DiscTable, BorcherdsError> {
        let mut map: BTreeMap<i64, BigInt> = BTreeMap::new();
        for ((n, l, m), e) in self.triples.iter() {
            if !self.solved.contains(&(*n, *m)) {
                continue;
            }
            let key = 4 * n * m - l * l;
            if let Some(prev) = map.insert(key, e.clone()) {
                if prev != *e {
                    return Err(BorcherdsError::NotAProduct(format!(
                        "exponents {prev} and {e} share the key {key}"
                    )));
                }
            }
        }
        let floor = map.keys().next().copied().unwrap_or(0);
        let top = self.solved.iter().map(|(a, b)| 4 * a * b).max().unwrap_or(0);
        let mut covered: BTreeSet<i64> = BTreeSet::new();
        for (a, b) in &self.solved {
            let mut l = 0i64;
            while 4 * a * b - l * l >= floor {
                covered.insert(4 * a * b - l * l);
                l += 1;
            }
        }
        // zero exponents inside solved blocks must agree with the other keys too
        for (a, b) in &self.solved {
            let mut l = 0i64;
            while 4 * a * b - l * l >= floor {
                let key = 4 * a * b - l * l;
                // the (0, 0) block only carries r^{−l}
                let lr = if (*a, *b) == (0, 0) { -l } else { l };
                let here = self.triples.get(*a, lr, *b);
                let there = map.get(&key).cloned().unwrap_or_default();
                if lr != 0 && here != there || (*a, *b) != (0, 0) && here != there {
                    return Err(BorcherdsError::NotAProduct(format!(
                        "exponent at ({a}, {lr}, {b}) is {here}, elsewhere {there} for key {key}"
                    )));
                }
                l += 1;
            }
        }
        let mut max = floor - 1;
        for nn in floor..=top {
            if nn.rem_euclid(4) == 1 || nn.rem_euclid(4) == 2 {
                max = nn;
                continue;
            }
            if !covered.contains(&nn) {
                break;
            }
            max = nn;
        }
        Ok(DiscTable::new(map, floor, max))
    }

    /// Collapse to `(nm, l) ↦ e`.
    pub fn to_pair(&self) -> Result<PairTable, BorcherdsError> {
        let mut map: BTreeMap<(i64, i64), BigInt> = BTreeMap::new();
        for (a, b) in &self.solved {
            if (*a, *b) == (0, 0) {
                continue;
            }
            let ls: BTreeSet<i64> = self
                .triples
                .iter()
                .filter(|((n, _, m), _)| n == a && m == b)
                .map(|((_, l, _), _)| *l)
                .chain(map.keys().filter(|(k, _)| *k == a * b).map(|(_, l)| *l).collect::<Vec<_>>())
                .collect();
            for l in ls {
                let here = self.triples.get(*a, l, *b);
                match map.get(&(a * b, l)) {
                    Some(prev) if *prev != here => {
                        return Err(BorcherdsError::NotAProduct(format!(
                            "exponents at ({a}, {l}, {b}) disagree on the key ({}, {l})",
                            a * b
                        )))
                    }
                    _ => {
                        map.insert((a * b, l), here);
                    }
                }
            }
        }
        let keys: BTreeSet<i64> = self.solved.iter().filter(|s| **s != (0, 0)).map(|(a, b)| a * b).collect();
        let mut nmax = -1;
        while keys.contains(&(nmax + 1)) {
            nmax += 1;
        }
        Ok(PairTable::new(map, 0, nmax))
    }
}

/// Recover the exponent table of a product with the given Weyl factor.
pub fn recover_exponents(
    series: &FourierSeries3,
    weyl: &FourierSeries3,
    range_rule: RangeRule,
    index_rule: IndexRule,
) -> Result<ExponentTable, BorcherdsError> {
    let rec = recover_blocks(series, weyl, range_rule)?;
    match index_rule {
        IndexRule::Discriminant => Ok(ExponentTable::Discriminant(rec.to_disc()?)),
        IndexRule::PairNm => Ok(ExponentTable::Pair(rec.to_pair()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{ExpTriple, GaussInt};

    fn lp(v: &[(i64, i64)]) -> Laurent {
        v.iter().map(|(k, c)| (*k, BigInt::from(*c))).collect()
    }

    #[test]
    fn laurent_division() {
        // (1 + r)(1 − r) = 1 − r²
        let a = lp(&[(0, 1), (8, -1)]);
        let b = lp(&[(0, 1), (4, 1)]);
        assert_eq!(lp_div(&a, &b), Ok(lp(&[(0, 1), (4, -1)])));
        assert_eq!(lp_div(&lp(&[(0, 1)]), &b), Err(false));
        assert_eq!(lp_div(&lp(&[(0, 1)]), &lp(&[(0, 2)])), Err(true));
    }

    #[test]
    fn cubed_r_factor() {
        let w = FourierSeries3::poly(&[(ExpTriple::new(2, 2, 2), 1)]);
        let base = FourierSeries3::poly(&[(ExpTriple::new(0, 0, 0), 1), (ExpTriple::new(0, -4, 0), -1)]);
        let s = w.mul(&base.pow(3)).truncate(TruncRegion::new(2, 2));
        let t = recover_exponents(&s, &w, RangeRule::PositiveCone, IndexRule::Discriminant).unwrap();
        match t {
            ExponentTable::Discriminant(d) => {
                assert_eq!(d.iter().map(|(k, v)| (*k, v.clone())).collect::<Vec<_>>(), vec![(-1, BigInt::from(3))]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn bare_monomial_is_empty() {
        let w = FourierSeries3::poly(&[(ExpTriple::new(2, 2, 2), 1)]);
        let t = recover_exponents(&w, &w, RangeRule::PositiveCone, IndexRule::Discriminant).unwrap();
        assert_eq!(t.to_json(), serde_json::json!({}));
    }

    #[test]
    fn not_a_product() {
        let w = FourierSeries3::poly(&[(ExpTriple::new(0, 0, 0), 1)]);
        let s = FourierSeries3::poly(&[(ExpTriple::new(0, 0, 0), 2)]);
        assert!(matches!(
            recover_exponents(&s, &w, RangeRule::B1, IndexRule::PairNm),
            Err(BorcherdsError::NotAProduct(_))
        ));
        let _ = GaussInt::one();
    }
}

