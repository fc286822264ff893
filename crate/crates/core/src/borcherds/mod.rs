//! Borcherds-type products: evaluation, inversion, the closed-form exponent
//! tables and the forms built from them.

mod product;
mod recover;
mod tables;

pub use product::{eval_product, mul_factor, Factor, ProductSpec, RangeRule};
pub use recover::{recover_blocks, recover_exponents, Recovered};
pub use tables::{DiscTable, ExponentTable, IndexRule, PairTable, TripleTable};

use crate::fourier::{ExpTriple, FourierError, FourierSeries3, TruncRegion};
use crate::jacobi::JacobiSeries;
use crate::theta::{delta5_theta, ThetaError};
use num_bigint::BigInt;
use num_traits::Zero;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BorcherdsError {
    #[error("exponent table needed at key {need}, known only up to {have}")]
    InsufficientFRange { need: i64, have: i64 },
    #[error("not a product: {0}")]
    NotAProduct(String),
    #[error("non-integral exponent in {0}")]
    NonIntegralExponent(String),
    #[error("factor (1 - q^{n} r^{l} s^{m}) cannot be expanded inside a truncation box")]
    DivergentFactor { n: i64, l: i64, m: i64 },
    #[error("unsupported prime {0}")]
    UnsupportedPrime(i64),
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

/// `(D/2)`: 0 for even `D`, 1 for `D ≡ ±1 mod 8`, −1 for `D ≡ ±3 mod 8`.
pub fn kron2(d: i64) -> i64 {
    match d.rem_euclid(8) {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

/// Legendre symbol `(a/p)` for an odd prime `p`.
pub fn legendre(a: i64, p: i64) -> i64 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    // Euler's criterion
    let mut r = 1i64;
    let mut b = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// `(−N/p)`, using `(·/2)` for `p = 2`.
pub fn chi(n: i64, p: i64) -> i64 {
    if p == 2 {
        kron2(-n)
    } else {
        legendre(-n, p)
    }
}

/// `f(N/k)` with zero for non-integral arguments.
fn f_div(f: &DiscTable, n: i64, k: i64) -> Result<BigInt, BorcherdsError> {
    if n % k == 0 {
        f.get(n / k)
    } else {
        Ok(BigInt::zero())
    }
}

/// The weak Jacobi form coefficients `f(N)` for `N ≤ max`, read off the
/// theta-built Δ₅ in a strip of Fourier–Jacobi blocks `s^{1/2}, s^{3/2}`.
pub fn f_table(max: i64) -> Result<DiscTable, BorcherdsError> {
    let amax = (max + 3).div_euclid(4).max(1);
    let region = TruncRegion::new(2 + 4 * amax, 6);
    let d5 = delta5_theta(region)?;
    let weyl = FourierSeries3::poly(&[(ExpTriple::new(2, 2, 2), 1)]);
    let rec = recover_blocks(&d5, &weyl, RangeRule::PositiveCone)?;
    let t = rec.to_disc()?;
    if t.max < max {
        return Err(BorcherdsError::InsufficientFRange { need: max, have: t.max });
    }
    Ok(t)
}

/// `f₂(N) = 8f(4N) + 2((−N/2) − 1)f(N) + f(N/4)`.
pub fn f2_table(f: &DiscTable) -> Result<DiscTable, BorcherdsError> {
    formula_table(f, 4, |n| {
        Ok(BigInt::from(8) * f.get(4 * n)? + BigInt::from(2 * (kron2(-n) - 1)) * f.get(n)? + f_div(f, n, 4)?)
    })
}

/// `f′₂(N) = 8f(4N) + (2(−N/2) − 3)f(N) + f(N/4)`.
pub fn fprime2_table(f: &DiscTable) -> Result<DiscTable, BorcherdsError> {
    formula_table(f, 4, |n| {
        Ok(BigInt::from(8) * f.get(4 * n)? + BigInt::from(2 * kron2(-n) - 3) * f.get(n)? + f_div(f, n, 4)?)
    })
}

/// Last term of the `f_p` formula: `f(N/p²)` (from the coset count) or
/// `f(N/p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FpVariant {
    Hecke,
    LastNOverP,
}

/// `f_p(N) = p³f(p²N) + (p(−N/p) − p − 1)f(N) + f(N/p²)`.
pub fn fp_table(f: &DiscTable, p: i64, variant: FpVariant) -> Result<DiscTable, BorcherdsError> {
    let last = match variant {
        FpVariant::Hecke => p * p,
        FpVariant::LastNOverP => p,
    };
    formula_table(f, p * p, |n| {
        Ok(BigInt::from(p * p * p) * f.get(p * p * n)?
            + BigInt::from(p * chi(n, p) - p - 1) * f.get(n)?
            + f_div(f, n, last)?)
    })
}

fn formula_table<F>(f: &DiscTable, scale: i64, mut g: F) -> Result<DiscTable, BorcherdsError>
where
    F: FnMut(i64) -> Result<BigInt, BorcherdsError>,
{
    let floor = -scale;
    let max = f.max.div_euclid(scale);
    let mut map = BTreeMap::new();
    for n in floor..=max {
        let v = g(n)?;
        if !v.is_zero() {
            map.insert(n, v);
        }
    }
    for n in (floor - 2 * scale)..floor {
        debug_assert!(g(n)?.is_zero(), "formula table nonzero below its floor");
    }
    Ok(DiscTable::new(map, floor, max))
}

/// `φ₀,₁ = Σ f(4n − l²) qⁿ rˡ` for `0 ≤ n ≤ order`.
pub fn phi01(f: &DiscTable, order: i64) -> Result<JacobiSeries, BorcherdsError> {
    let mut s = JacobiSeries::zero(2 * order, 0, 2);
    for n in 0..=order {
        let lmax = ((4 * n + 1) as f64).sqrt() as i64 + 1;
        for l in -lmax..=lmax {
            let c = f.get(4 * n - l * l)?;
            s.add_term(2 * n, 2 * l, &c);
        }
    }
    Ok(s)
}

/// Which combination of `j·φ₀,₁`, `φ₀,₁|T₀(2)` and `φ₀,₁` defines φ⁽⁵⁾.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phi5Reading {
    /// `jφ − 10(φ|T₀(2)) − 680φ` read literally.
    Literal,
    /// `jφ − 10(φ|T₀(2) − 2φ) − 680φ`, pairing the Hecke image with the
    /// shift that makes its constant term 70.
    Consistent,
}

/// φ⁽⁵⁾₀,₁ to `q^order`. Needs `f` up to about `16·order`.
pub fn build_phi5_weak(f: &DiscTable, order: i64, reading: Phi5Reading) -> Result<JacobiSeries, BorcherdsError> {
    let phi = phi01(f, order + 1)?;
    let j = JacobiSeries::from_q(&crate::theta::j_invariant(order + 1));
    let jphi = j.mul(&phi).truncate(2 * order);
    let t0 = crate::hecke::jacobi_t0(&phi_for_t0(f, order)?, 2, 0, crate::hecke::T0Variant::Character)
        .map_err(|e| BorcherdsError::NotAProduct(e.to_string()))?;
    let c = match reading {
        Phi5Reading::Literal => 680,
        Phi5Reading::Consistent => 660,
    };
    Ok(jphi
        .sub(&t0.scale(&BigInt::from(10)))
        .sub(&phi.scale(&BigInt::from(c)))
        .truncate(2 * order)
        .with_meta(0, 2))
}

/// φ₀,₁ long enough that its `T₀(2)` image reaches `q^order`.
fn phi_for_t0(f: &DiscTable, order: i64) -> Result<JacobiSeries, BorcherdsError> {
    phi01(f, 4 * order + 1)
}

/// The table `g(n, l)` of φ⁽⁵⁾, keyed `(n, l)`.
pub fn g_table(phi5: &JacobiSeries) -> PairTable {
    let mut map = BTreeMap::new();
    for ((n2, l2), c) in phi5.iter() {
        if n2 % 2 == 0 && l2 % 2 == 0 {
            map.insert((n2 / 2, l2 / 2), c.clone());
        }
    }
    PairTable::new(map, -1, phi5.nmax2() / 2)
}

pub fn delta5_weyl() -> FourierSeries3 {
    FourierSeries3::poly(&[(ExpTriple::new(2, 2, 2), 1)])
}

/// `q²rs²(q − s)`.
pub fn delta35_weyl() -> FourierSeries3 {
    FourierSeries3::poly(&[(ExpTriple::new(12, 4, 8), 1), (ExpTriple::new(8, 4, 12), -1)])
}

/// `q^{3/2}r^{1/2}s^{3/2}(q − s)`.
pub fn delta30_weyl() -> FourierSeries3 {
    FourierSeries3::poly(&[(ExpTriple::new(10, 2, 6), 1), (ExpTriple::new(6, 2, 10), -1)])
}

/// `qs(q − s)`.
pub fn delta30tilde_weyl() -> FourierSeries3 {
    FourierSeries3::poly(&[(ExpTriple::new(8, 0, 4), 1), (ExpTriple::new(4, 0, 8), -1)])
}

/// `r⁻¹(qr − s)(q − rs) = q² − qrs − qr⁻¹s + s²`.
pub fn f5_weyl() -> FourierSeries3 {
    FourierSeries3::poly(&[
        (ExpTriple::new(8, 0, 0), 1),
        (ExpTriple::new(4, 4, 4), -1),
        (ExpTriple::new(4, -4, 4), -1),
        (ExpTriple::new(0, 0, 8), 1),
    ])
}

/// `q^{5p(p²−1)/12} r^{−(p−1)/2} s^{(p²−1)/2} (r^p − 1)/(r − 1)`.
pub fn fp_weyl(p: i64) -> Result<FourierSeries3, BorcherdsError> {
    let num = 5 * p * (p * p - 1);
    if p < 3 || num % 12 != 0 || (p - 1) % 2 != 0 {
        return Err(BorcherdsError::UnsupportedPrime(p));
    }
    let (a, b, c) = (num / 12, -(p - 1) / 2, (p * p - 1) / 2);
    let terms: Vec<(ExpTriple, i64)> = (0..p).map(|k| (ExpTriple::from_q(a, b + k, c), 1)).collect();
    Ok(FourierSeries3::poly(&terms))
}

pub fn delta5_spec(f: &DiscTable) -> ProductSpec {
    ProductSpec {
        weyl: delta5_weyl(),
        table: ExponentTable::Discriminant(f.clone()),
        index_rule: IndexRule::Discriminant,
        range_rule: RangeRule::PositiveCone,
    }
}

pub fn delta35_spec(f: &DiscTable) -> Result<ProductSpec, BorcherdsError> {
    Ok(ProductSpec {
        weyl: delta35_weyl(),
        table: ExponentTable::Discriminant(f2_table(f)?),
        index_rule: IndexRule::Discriminant,
        range_rule: RangeRule::PositiveCone,
    })
}

pub fn delta30_spec(f: &DiscTable) -> Result<ProductSpec, BorcherdsError> {
    Ok(ProductSpec {
        weyl: delta30_weyl(),
        table: ExponentTable::Discriminant(fprime2_table(f)?),
        index_rule: IndexRule::Discriminant,
        range_rule: RangeRule::PositiveCone,
    })
}

/// Exponent `f₂(N) − f(N/4)` on exponent vectors in `M₁,II` (all of
/// `n, l, m` even), `f₂(N)` elsewhere.
pub fn delta30tilde_spec(f: &DiscTable) -> Result<ProductSpec, BorcherdsError> {
    Ok(ProductSpec {
        weyl: delta30tilde_weyl(),
        table: ExponentTable::Masked { base: f2_table(f)?, sub: f.clone() },
        index_rule: IndexRule::Discriminant,
        range_rule: RangeRule::PositiveCone,
    })
}

/// `F_p` with the given last term and product range (`MGeZero` literally,
/// `MGeZeroConvergent` to evaluate).
pub fn fp_spec(f: &DiscTable, p: i64, variant: FpVariant, range_rule: RangeRule) -> Result<ProductSpec, BorcherdsError> {
    Ok(ProductSpec {
        weyl: fp_weyl(p)?,
        table: ExponentTable::Discriminant(fp_table(f, p, variant)?),
        index_rule: IndexRule::Discriminant,
        range_rule,
    })
}

pub fn f5_spec(g: &PairTable) -> ProductSpec {
    ProductSpec {
        weyl: f5_weyl(),
        table: ExponentTable::Pair(g.clone()),
        index_rule: IndexRule::PairNm,
        range_rule: RangeRule::B1,
    }
}

pub fn build_delta5(f: &DiscTable, region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    eval_product(&delta5_spec(f), region)
}

pub fn build_delta35(f: &DiscTable, region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    eval_product(&delta35_spec(f)?, region)
}

pub fn build_delta30(f: &DiscTable, region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    eval_product(&delta30_spec(f)?, region)
}

pub fn build_delta30tilde(f: &DiscTable, region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    eval_product(&delta30tilde_spec(f)?, region)
}

pub fn build_fp(f: &DiscTable, p: i64, region: TruncRegion) -> Result<FourierSeries3, BorcherdsError> {
    eval_product(&fp_spec(f, p, FpVariant::Hecke, RangeRule::MGeZeroConvergent)?, region)
}

/// F⁽⁵⁾ as a product and as `Δ₁₂(z₁)² exp(−Σ m⁻¹ φ̃|T₋(m))`.
pub fn build_f5(phi5: &JacobiSeries, region: TruncRegion) -> Result<(FourierSeries3, FourierSeries3), BorcherdsError> {
    let g = g_table(phi5);
    let product = eval_product(&f5_spec(&g), region)?;
    let order = region.nmax4.div_euclid(4) + 2;
    let d12 = crate::theta::delta12(order);
    let psi = JacobiSeries::from_q(&d12.mul(&d12)).to_fourier(0, TruncRegion::new(4 * order, crate::fourier::UNBOUNDED));
    let lift = crate::hecke::exp_lift(&psi, phi5, region).map_err(|e| BorcherdsError::NotAProduct(e.to_string()))?;
    Ok((product, lift))
}

/// Largest discriminant `4nm − l²` met by a factor of a product with
/// Weyl valuation `(wn4, wm4)` on `region`.
pub fn max_key(weyl: &FourierSeries3, region: TruncRegion) -> i64 {
    let a = (region.nmax4 - weyl.min_n4().unwrap_or(0)).div_euclid(4).max(0);
    let b = (region.mmax4 - weyl.min_m4().unwrap_or(0)).div_euclid(4).max(0);
    4 * a * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::GaussInt;

    #[test]
    fn characters() {
        assert_eq!(kron2(1), 1);
        assert_eq!(kron2(-3), -1);
        assert_eq!(kron2(-4), 0);
        assert_eq!(legendre(2, 3), -1);
        assert_eq!(legendre(4, 5), 1);
        assert_eq!(chi(3, 3), 0);
    }

    #[test]
    fn small_f_table() {
        let f = f_table(12).unwrap();
        assert_eq!(f.at(-1), BigInt::from(1));
        assert_eq!(f.at(0), BigInt::from(10));
        assert_eq!(f.at(3), BigInt::from(-64));
        assert_eq!(f.at(4), BigInt::from(108));
        assert_eq!(f.floor, -1);
    }

    #[test]
    fn trivial_product_is_one() {
        let spec = ProductSpec {
            weyl: FourierSeries3::poly(&[(ExpTriple::new(0, 0, 0), 1)]),
            table: ExponentTable::Discriminant(DiscTable::empty()),
            index_rule: IndexRule::Discriminant,
            range_rule: RangeRule::PositiveCone,
        };
        let p = eval_product(&spec, TruncRegion::square(12)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&ExpTriple::new(0, 0, 0)), GaussInt::one());
    }

    #[test]
    fn delta35_leading_terms() {
        let f = f_table(80).unwrap();
        let d35 = build_delta35(&f, TruncRegion::new(16, 16)).unwrap();
        assert_eq!(d35.coeff(&ExpTriple::from_q(3, 1, 2)), GaussInt::one());
        assert_eq!(d35.coeff(&ExpTriple::from_q(2, 1, 3)), GaussInt::from(-1));
    }

    #[test]
    fn delta30_r_block_closes_up() {
        // (1 − r⁻²)(1 − r⁻¹)⁻¹ = 1 + r⁻¹
        let f = f_table(80).unwrap();
        let d30 = build_delta30(&f, TruncRegion::new(12, 12)).unwrap();
        assert_eq!(d30.coeff(&ExpTriple::new(10, 2, 6)), GaussInt::one());
        assert_eq!(d30.coeff(&ExpTriple::new(10, -2, 6)), GaussInt::one());
        assert_eq!(d30.coeff(&ExpTriple::new(6, 2, 10)), GaussInt::from(-1));
        assert_eq!(d30.coeff(&ExpTriple::new(10, -6, 6)), GaussInt::zero());
    }
}
