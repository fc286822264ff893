//! Theta constants, Δ₅ by three routes, and the elliptic building blocks
//! (η-powers, ϑ₁₁, φ₅,½, E₄, E₆, Δ₁₂, j).

use crate::fourier::{ExpTriple, FourierSeries3, GaussInt, TruncRegion};
use crate::jacobi::JacobiSeries;
use crate::qseries::QSeries;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThetaError {
    #[error("odd characteristic a={a:?} b={b:?}")]
    OddCharacteristic { a: (u8, u8), b: (u8, u8) },
    #[error("coefficient at {0} not divisible by 64")]
    NonIntegralResult(ExpTriple),
    #[error("characteristic has a fractional shift; use the shifted form")]
    Shifted,
}

/// Genus-2 characteristic `(a, b)` with `a, b ∈ (ℤ/2)²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaChar {
    pub a: (u8, u8),
    pub b: (u8, u8),
}

impl ThetaChar {
    pub const fn new(a: (u8, u8), b: (u8, u8)) -> Self {
        ThetaChar { a, b }
    }

    pub fn is_even(&self) -> bool {
        (self.a.0 * self.b.0 + self.a.1 * self.b.1) % 2 == 0
    }

    /// The ten even characteristics.
    pub fn all_even() -> Vec<ThetaChar> {
        let bits = [(0, 0), (0, 1), (1, 0), (1, 1)];
        bits.iter()
            .flat_map(|a| bits.iter().map(move |b| ThetaChar::new(*a, *b)))
            .filter(ThetaChar::is_even)
            .collect()
    }
}

/// `q^{q_shift8/8} s^{s_shift8/8} · series`; the shift is nonzero exactly
/// when the matching entry of `a` is 1, since then every lattice point
/// carries an extra `1/8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaConstant {
    pub q_shift8: i64,
    pub s_shift8: i64,
    pub series: FourierSeries3,
}

impl ThetaConstant {
    /// The plain series, available when there is no fractional shift.
    pub fn into_series(self) -> Result<FourierSeries3, ThetaError> {
        if self.q_shift8 == 0 && self.s_shift8 == 0 {
            Ok(self.series)
        } else {
            Err(ThetaError::Shifted)
        }
    }
}

fn isqrt(n: i64) -> i64 {
    if n < 0 {
        return -1;
    }
    let mut x = (n as f64).sqrt() as i64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Odd-or-even integers `t ≡ a mod 2` with `t² ≤ bound`.
fn shifted_range(a: i64, bound: i64) -> impl Iterator<Item = i64> {
    let r = isqrt(bound);
    (-r..=r).filter(move |t| (t - a).rem_euclid(2) == 0)
}

/// Lattice sum with reduced bounds on `(t² − a)/2` where `t = 2l + a`.
fn theta_reduced(c: ThetaChar, nred4: i64, mred4: i64) -> FourierSeries3 {
    let (a1, a2) = (c.a.0 as i64, c.a.1 as i64);
    let (b1, b2) = (c.b.0 as i64, c.b.1 as i64);
    let region = TruncRegion::new(nred4, mred4);
    let mut out = FourierSeries3::zero(region);
    for t1 in shifted_range(a1, 2 * nred4 + a1) {
        for t2 in shifted_range(a2, 2 * mred4 + a2) {
            let e = ExpTriple::new((t1 * t1 - a1) / 2, t1 * t2, (t2 * t2 - a2) / 2);
            let l1 = (t1 - a1) / 2;
            let l2 = (t2 - a2) / 2;
            let sign = if (b1 * l1 + b2 * l2).rem_euclid(2) == 0 { 1 } else { -1 };
            out.add_term(e, &GaussInt::real(sign));
        }
    }
    out
}

/// `ϑ_{a,b}(Z) = Σ_{l∈ℤ²} exp(πi(Z[l + a/2] + bᵀl))` on `region`.
pub fn theta_constant(c: ThetaChar, region: TruncRegion) -> Result<ThetaConstant, ThetaError> {
    if !c.is_even() {
        return Err(ThetaError::OddCharacteristic { a: c.a, b: c.b });
    }
    let (a1, a2) = (c.a.0 as i64, c.a.1 as i64);
    Ok(ThetaConstant {
        q_shift8: a1,
        s_shift8: a2,
        series: theta_reduced(c, region.nmax4 - a1, region.mmax4 - a2),
    })
}

/// Δ₅ as one sixty-fourth of the product of the ten even theta constants.
pub fn delta5_theta(region: TruncRegion) -> Result<FourierSeries3, ThetaError> {
    let chars = ThetaChar::all_even();
    let (q8, s8): (i64, i64) = chars
        .iter()
        .fold((0, 0), |(x, y), c| (x + c.a.0 as i64, y + c.a.1 as i64));
    debug_assert_eq!((q8, s8), (4, 4));
    let shift = ExpTriple::new(q8 / 2, 0, s8 / 2);
    let factors: Vec<FourierSeries3> = chars
        .par_iter()
        .map(|c| theta_reduced(*c, region.nmax4 - shift.n4, region.mmax4 - shift.m4))
        .collect();
    let prod = FourierSeries3::product(factors, TruncRegion::new(region.nmax4 - shift.n4, region.mmax4 - shift.m4));
    let prod = prod.shift(shift, &GaussInt::one());
    let sixty_four = BigInt::from(64);
    if let Some((e, _)) = prod.iter().find(|(_, c)| c.div_exact(&sixty_four).is_none()) {
        return Err(ThetaError::NonIntegralResult(*e));
    }
    Ok(prod.div_exact(&sixty_four).expect("checked divisibility").truncate(region))
}

/// `∏_{n≥1} (1 − qⁿ)^k` (η^k without its `q^{k/24}`), valid to `q^order`.
pub fn eta_hat(k: u32, order: i64) -> QSeries {
    let bound4 = 4 * order;
    let mut base = QSeries::zero(bound4);
    let mut j = 0i64;
    loop {
        let mut any = false;
        for jj in if j == 0 { vec![0] } else { vec![j, -j] } {
            let e = jj * (3 * jj - 1) / 2;
            if e <= order {
                any = true;
                let sign = if jj.rem_euclid(2) == 0 { 1 } else { -1 };
                base.add_term(4 * e, &BigInt::from(sign));
            }
        }
        if !any {
            break;
        }
        j += 1;
    }
    base.pow(k)
}

/// `−r^{−c/2} ∏_{n≥1}(1 − q^{n−1}r^c)(1 − qⁿr^{−c})(1 − qⁿ)`, i.e.
/// `ϑ₁₁(τ, c z)` without its `q^{1/8}`, valid to `q^order`.
pub fn theta11_hat(c: i64, order: i64) -> JacobiSeries {
    let mut p = JacobiSeries::one(2 * order);
    for n in 1..=order + 1 {
        if 2 * (n - 1) <= 2 * order {
            p.mul_one_minus(2 * (n - 1), 2 * c);
        }
        if 2 * n <= 2 * order {
            p.mul_one_minus(2 * n, -2 * c);
        }
    }
    p.mul(&JacobiSeries::from_q(&eta_hat(1, order)))
        .shift(0, -c)
        .scale(&BigInt::from(-1))
}

/// `φ₅,½ = η⁹ϑ₁₁`, valid to `q^order`. Coefficients `g(n, l)` sit at
/// `(n2, l2) = (n, l)` with `n, l` odd.
pub fn phi_5_half(order: i64) -> JacobiSeries {
    let core = theta11_hat(1, order).mul(&JacobiSeries::from_q(&eta_hat(9, order)));
    // η⁹ϑ₁₁ = q^{9/24 + 1/8} · (η̂⁹ · ϑ̂₁₁)
    core.shift(1, 0).truncate(2 * order).with_meta(5, 1)
}

/// The Maass divisor sum `Σ_{d|(n,l,m)} d⁴ g(nm/d², l/d)` over odd
/// `n, l, m` with `n, m > 0` and `4nm > l²`.
pub fn maass_lift_delta5(region: TruncRegion) -> FourierSeries3 {
    let nmax = region.nmax4 / 2;
    let mmax = region.mmax4 / 2;
    let order = (nmax * mmax + 1) / 2 + 1;
    let g = phi_5_half(order);
    let mut out = FourierSeries3::zero(region);
    for n in (1..=nmax).step_by(2) {
        for m in (1..=mmax).step_by(2) {
            let lmax = isqrt(4 * n * m - 1);
            for l in -lmax..=lmax {
                if l.rem_euclid(2) == 0 {
                    continue;
                }
                let g0 = n.gcd(&m).gcd(&l);
                let mut c = BigInt::zero();
                for d in (1..=g0).filter(|d| g0 % d == 0) {
                    c += BigInt::from(d).pow(4) * g.coeff2(n * m / (d * d), l / d);
                }
                out.add_term(ExpTriple::from_pi(n, l, m), &GaussInt::from(c));
            }
        }
    }
    out
}

fn sigma(k: u32, n: i64) -> BigInt {
    (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(k)).sum()
}

/// `E₄ = 1 + 240Σσ₃(n)qⁿ` or `E₆ = 1 − 504Σσ₅(n)qⁿ`, valid to `q^order`.
pub fn eisenstein_series(k: u32, order: i64) -> QSeries {
    let (c, p) = match k {
        4 => (240, 3),
        6 => (-504, 5),
        _ => panic!("only weights 4 and 6"),
    };
    let mut cs = vec![BigInt::one()];
    for n in 1..=order {
        cs.push(BigInt::from(c) * sigma(p, n));
    }
    QSeries::from_q_coeffs(&cs, 4 * order)
}

/// `Δ₁₂ = q∏(1 − qⁿ)²⁴`, valid to `q^order`.
pub fn delta12(order: i64) -> QSeries {
    eta_hat(24, order - 1).shift(4)
}

/// `j = E₄³/Δ₁₂`, valid to `q^order`.
pub fn j_invariant(order: i64) -> QSeries {
    let inv = delta12(order + 2).inverse().expect("Δ₁₂ has unit leading coefficient");
    eisenstein_series(4, order + 1).pow(3).mul(&inv).truncate(4 * order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_even_characteristics() {
        assert_eq!(ThetaChar::all_even().len(), 10);
        let odd = ThetaChar::new((1, 0), (1, 0));
        assert!(matches!(
            theta_constant(odd, TruncRegion::square(8)),
            Err(ThetaError::OddCharacteristic { .. })
        ));
    }

    #[test]
    fn theta_small_terms() {
        let r = TruncRegion::square(8);
        let t = theta_constant(ThetaChar::new((0, 0), (0, 0)), r).unwrap().into_series().unwrap();
        assert_eq!(t.coeff(&ExpTriple::default()), GaussInt::one());
        assert_eq!(t.coeff(&ExpTriple::from_pi(1, 0, 0)), GaussInt::real(2));
        assert_eq!(t.coeff(&ExpTriple::from_pi(0, 0, 1)), GaussInt::real(2));
        let t = theta_constant(ThetaChar::new((0, 0), (1, 1)), r).unwrap().into_series().unwrap();
        assert_eq!(t.coeff(&ExpTriple::default()), GaussInt::one());
        assert_eq!(t.coeff(&ExpTriple::from_pi(1, 0, 0)), GaussInt::real(-2));
    }

    #[test]
    fn delta5_leading_terms() {
        let d = delta5_theta(TruncRegion::square(12)).unwrap();
        assert_eq!(d.coeff(&ExpTriple::from_pi(1, 1, 1)), GaussInt::one());
        assert_eq!(d.coeff(&ExpTriple::from_pi(1, -1, 1)), GaussInt::real(-1));
        for (e, c) in d.iter() {
            let (n, l, m) = e.to_pi().unwrap();
            assert!(n % 2 != 0 && l % 2 != 0 && m % 2 != 0, "even index at {e}");
            assert_eq!(d.coeff(&e.swap_nm()), *c);
        }
    }

    #[test]
    fn phi_5_half_first_terms() {
        let g = phi_5_half(4);
        assert_eq!(g.coeff2(1, -1), BigInt::from(-1));
        assert_eq!(g.coeff2(1, 1), BigInt::one());
        for ((n, l), _) in g.iter() {
            assert!(n % 2 != 0 && l % 2 != 0);
        }
        // the r-degree of the q^{3/2} row is at most 3
        assert!(g.row(3).keys().all(|l| l.abs() <= 3));
    }

    #[test]
    fn maass_divisor_sum_at_333() {
        let g = phi_5_half(6);
        let lift = maass_lift_delta5(TruncRegion::square(6));
        let expect = g.coeff2(9, 3) + BigInt::from(81) * g.coeff2(1, 1);
        assert_eq!(lift.coeff(&ExpTriple::from_pi(3, 3, 3)), GaussInt::from(expect));
    }

    #[test]
    fn elliptic_spot_values() {
        let e4 = eisenstein_series(4, 3);
        assert_eq!(e4.coeff(1), BigInt::from(240));
        assert_eq!(e4.coeff(2), BigInt::from(2160));
        let d = delta12(4);
        assert_eq!(d.coeff(1), BigInt::one());
        assert_eq!(d.coeff(2), BigInt::from(-24));
        assert_eq!(d.coeff(3), BigInt::from(252));
        let j = j_invariant(2);
        assert_eq!(j.coeff(-1), BigInt::one());
        assert_eq!(j.coeff(0), BigInt::from(744));
        assert_eq!(j.coeff(1), BigInt::from(196884));
        assert_eq!(j.coeff(2), BigInt::from(21493760));
    }
}
