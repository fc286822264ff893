//! Coset systems of `T(p)` and what they do to expansions: the
//! multiplicative operator `[F]_p`, χ₇₅, the additive `T(p)`, the
//! Hecke–Jacobi operator `T₀(p)`, the `T₋(m)` lifts and the exponential
//! lift, and the Humbert divisor count.

use crate::borcherds::{
    chi, eval_product, f_table, phi01, BorcherdsError, DiscTable, ExponentTable, IndexRule, ProductSpec, RangeRule, TripleTable,
};
use crate::fourier::{
    series_equal, substitute, ExpTriple, FourierError, FourierSeries3, GaussInt, Mismatch, TruncRegion,
    VariableSubstitution,
};
use crate::jacobi::JacobiSeries;
use crate::theta::{delta12, delta5_theta, ThetaError};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Pow, Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeckeError {
    #[error(transparent)]
    Fourier(#[from] FourierError),
    #[error(transparent)]
    Borcherds(#[from] BorcherdsError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error("not an index-1 form: {0}")]
    IndexNotOne(String),
    #[error("non-integral lift coefficient: {0}")]
    NonIntegralLiftCoefficient(String),
    #[error("Hecke image is not integral: {0}")]
    NonIntegralImage(String),
    #[error("weight {0} is not supported here")]
    UnsupportedWeight(i64),
}

type Q = Ratio<i64>;
type Mat2 = [[i64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CosetFamily {
    /// `diag(p, p, 1, 1)`
    Scalar,
    /// `(E, X; 0, pE)`, `X` symmetric mod `p`
    Translation,
    /// `(diag(1,p), (a,0;0,0); 0, diag(p,1))`
    AFamily,
    /// `((p,0;−b₁,1), (0,0;0,b₂); 0, (1,b₁;0,p))`
    BFamily,
}

/// `M = (A, B; 0, D)` with `A·ᵗD = μE`. Acts by `Z ↦ (AZ + B)D⁻¹`; the
/// slash factor is `det(D)^{−k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetRep {
    pub family: CosetFamily,
    pub a: Mat2,
    pub b: Mat2,
    pub d: Mat2,
    pub mu: i64,
}

fn det2(m: &Mat2) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mul2(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn inv2(m: &Mat2) -> [[Q; 2]; 2] {
    let d = det2(m);
    [
        [Q::new(m[1][1], d), Q::new(-m[0][1], d)],
        [Q::new(-m[1][0], d), Q::new(m[0][0], d)],
    ]
}

/// An affine form `c₁z₁ + c₂z₂ + c₃z₃ + c₀`, stored `[c₁, c₂, c₃, c₀]`.
type Aff = [Q; 4];

fn aff_z(i: usize) -> Aff {
    let mut a = [Q::zero(); 4];
    a[i] = Q::one();
    a
}

fn aff_const(c: Q) -> Aff {
    [Q::zero(), Q::zero(), Q::zero(), c]
}

fn aff_add(x: &Aff, y: &Aff) -> Aff {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]
}

fn aff_scale(x: &Aff, c: Q) -> Aff {
    [x[0] * c, x[1] * c, x[2] * c, x[3] * c]
}

/// The symmetric matrix `Z` with affine entries.
fn z_matrix() -> [[Aff; 2]; 2] {
    [[aff_z(0), aff_z(1)], [aff_z(1), aff_z(2)]]
}

/// `X·Y` for an integer (or rational) matrix on the left of an affine one.
fn lmul(x: &[[Q; 2]; 2], z: &[[Aff; 2]; 2]) -> [[Aff; 2]; 2] {
    let mut out = [[aff_const(Q::zero()); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = aff_add(&aff_scale(&z[0][j], x[i][0]), &aff_scale(&z[1][j], x[i][1]));
        }
    }
    out
}

fn rmul(z: &[[Aff; 2]; 2], y: &[[Q; 2]; 2]) -> [[Aff; 2]; 2] {
    let mut out = [[aff_const(Q::zero()); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = aff_add(&aff_scale(&z[i][0], y[0][j]), &aff_scale(&z[i][1], y[1][j]));
        }
    }
    out
}

fn to_q(m: &Mat2) -> [[Q; 2]; 2] {
    [[Q::from(m[0][0]), Q::from(m[0][1])], [Q::from(m[1][0]), Q::from(m[1][1])]]
}

fn add_const(z: &[[Aff; 2]; 2], b: &[[Q; 2]; 2]) -> [[Aff; 2]; 2] {
    let mut out = *z;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j][3] += b[i][j];
        }
    }
    out
}

fn sym_entries(w: &[[Aff; 2]; 2]) -> [Aff; 3] {
    assert_eq!(w[0][1], w[1][0], "image of a symmetric matrix is not symmetric");
    [w[0][0], w[0][1], w[1][1]]
}

impl CosetRep {
    pub fn det_d(&self) -> i64 {
        det2(&self.d)
    }

    /// `U` in `M = (U, V; 0, p·ᵗU⁻¹)`.
    pub fn u(&self) -> Mat2 {
        self.a
    }

    /// `A·ᵗD = μE` and `A·ᵗB` symmetric.
    pub fn is_similitude(&self) -> bool {
        let adt = mul2(&self.a, &transpose(&self.d));
        let abt = mul2(&self.a, &transpose(&self.b));
        adt == [[self.mu, 0], [0, self.mu]] && abt[0][1] == abt[1][0]
    }

    /// `(z₁', z₂', z₃')` of `M⟨Z⟩` as affine forms in `(z₁, z₂, z₃)`.
    pub fn moebius(&self) -> [Aff; 3] {
        let az = lmul(&to_q(&self.a), &z_matrix());
        let azb = add_const(&az, &to_q(&self.b));
        sym_entries(&rmul(&azb, &inv2(&self.d)))
    }

    /// The induced change of variables; fails when a coefficient leaves
    /// quarter units (every `p > 2`).
    pub fn substitution(&self) -> Result<VariableSubstitution, FourierError> {
        let rows = self.moebius();
        let l = [
            [rows[0][0], rows[0][1], rows[0][2]],
            [rows[1][0], rows[1][1], rows[1][2]],
            [rows[2][0], rows[2][1], rows[2][2]],
        ];
        let t = [rows[0][3], rows[1][3], rows[2][3]];
        VariableSubstitution::new(l, t)
    }
}

/// The `(p² + 1)(p + 1)` representatives, residues `0, …, p − 1`, in the
/// order scalar, translations, `a`-family, `b`-family.
pub fn coset_reps(p: i64) -> Vec<CosetRep> {
    let mut out = vec![CosetRep {
        family: CosetFamily::Scalar,
        a: [[p, 0], [0, p]],
        b: [[0, 0], [0, 0]],
        d: [[1, 0], [0, 1]],
        mu: p,
    }];
    for a1 in 0..p {
        for a2 in 0..p {
            for a3 in 0..p {
                out.push(CosetRep {
                    family: CosetFamily::Translation,
                    a: [[1, 0], [0, 1]],
                    b: [[a1, a2], [a2, a3]],
                    d: [[p, 0], [0, p]],
                    mu: p,
                });
            }
        }
    }
    for a in 0..p {
        out.push(CosetRep {
            family: CosetFamily::AFamily,
            a: [[1, 0], [0, p]],
            b: [[a, 0], [0, 0]],
            d: [[p, 0], [0, 1]],
            mu: p,
        });
    }
    for b1 in 0..p {
        for b2 in 0..p {
            out.push(CosetRep {
                family: CosetFamily::BFamily,
                a: [[p, 0], [-b1, 1]],
                b: [[0, 0], [0, b2]],
                d: [[1, b1], [0, p]],
                mu: p,
            });
        }
    }
    out
}

fn qpow(p: i64, e: i64) -> Ratio<BigInt> {
    let b = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Ratio::from_integer(b)
    } else {
        Ratio::new(BigInt::one(), b)
    }
}

fn log_p(p: i64, mut x: i64) -> i64 {
    let mut e = 0;
    while x % p == 0 && x != 1 {
        x /= p;
        e += 1;
    }
    assert_eq!(x, 1, "det D is not a power of p");
    e
}

/// `F|_k M` on `target`: the substituted series and the scalar `det(D)^{−k}`.
pub fn slash_factor(
    f: &FourierSeries3,
    rep: &CosetRep,
    k: i64,
    target: TruncRegion,
) -> Result<(FourierSeries3, Ratio<BigInt>), HeckeError> {
    let s = rep.substitution()?;
    let series = substitute(f, &s, target)?;
    let dd = rep.det_d();
    let scalar = qpow(dd, -k);
    Ok((series, scalar))
}

/// The fifteen factors of χ₇₅, in order.
pub fn chi75_substitutions() -> Vec<(String, VariableSubstitution)> {
    let mut out = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                out.push((
                    format!("((z1+{a})/2, (z2+{b})/2, (z3+{c})/2)"),
                    VariableSubstitution::from_quarters([[2, 0, 0], [0, 2, 0], [0, 0, 2]], [2 * a, 2 * b, 2 * c]),
                ));
            }
        }
    }
    for a in 0..2 {
        out.push((
            format!("((z1+{a})/2, z2, 2z3)"),
            VariableSubstitution::from_quarters([[2, 0, 0], [0, 4, 0], [0, 0, 8]], [2 * a, 0, 0]),
        ));
        out.push((
            format!("(2z1, z2, (z3+{a})/2)"),
            VariableSubstitution::from_quarters([[8, 0, 0], [0, 4, 0], [0, 0, 2]], [0, 0, 2 * a]),
        ));
    }
    out.push(("(2z1, 2z2, 2z3)".into(), VariableSubstitution::scale(2)));
    for b in 0..2 {
        out.push((
            format!("(2z1, -z1+z2, (z1-2z2+z3+{b})/2)"),
            VariableSubstitution::from_quarters([[8, 0, 0], [-4, 4, 0], [2, -4, 2]], [0, 0, 2 * b]),
        ));
    }
    out
}

/// Least `n4` and least `m4` among the images of `f`'s terms.
fn image_valuation(f: &FourierSeries3, s: &VariableSubstitution) -> Result<(i64, i64), HeckeError> {
    let mut vn = i64::MAX;
    let mut vm = i64::MAX;
    for (e, _) in f.iter() {
        let (img, _) = s.apply_exponent(e)?;
        vn = vn.min(img.n4);
        vm = vm.min(img.m4);
    }
    if vn == i64::MAX {
        return Err(FourierError::UncoveredTarget { reason: "zero series has no valuation".into() }.into());
    }
    Ok((vn, vm))
}

/// Per-factor targets so that the product of all images is known on
/// `region`: each factor only needs the room the others leave it.
fn factor_targets(
    probe: &FourierSeries3,
    subs: &[VariableSubstitution],
    region: TruncRegion,
) -> Result<Vec<TruncRegion>, HeckeError> {
    let vals: Vec<(i64, i64)> = subs.iter().map(|s| image_valuation(probe, s)).collect::<Result<_, _>>()?;
    let tn: i64 = vals.iter().map(|v| v.0).sum();
    let tm: i64 = vals.iter().map(|v| v.1).sum();
    Ok(vals
        .iter()
        .map(|(vn, vm)| TruncRegion::new(region.nmax4 - (tn - vn), region.mmax4 - (tm - vm)))
        .collect())
}

/// Source box of `F` that covers every factor of the image product on
/// `region`; `probe` is any truncation of `F` containing its lead terms.
pub fn required_source(
    probe: &FourierSeries3,
    subs: &[VariableSubstitution],
    region: TruncRegion,
) -> Result<TruncRegion, HeckeError> {
    let targets = factor_targets(probe, subs, region)?;
    let mut need = TruncRegion::new(0, 0);
    for (s, t) in subs.iter().zip(targets) {
        let r = s.source_region_for(&t).ok_or_else(|| FourierError::UncoveredTarget {
            reason: "substitution shape has no coverage rule".into(),
        })?;
        need = TruncRegion::new(need.nmax4.max(r.nmax4), need.mmax4.max(r.mmax4));
    }
    Ok(need)
}

/// `∏ᵢ F(sᵢ(Z))` on `region`.
pub fn product_of_images(
    f: &FourierSeries3,
    subs: &[VariableSubstitution],
    region: TruncRegion,
) -> Result<FourierSeries3, HeckeError> {
    let targets = factor_targets(f, subs, region)?;
    let factors: Vec<FourierSeries3> = subs
        .par_iter()
        .zip(targets.par_iter())
        .map(|(s, t)| substitute(f, s, *t))
        .collect::<Result<_, _>>()?;
    Ok(FourierSeries3::product(factors, region))
}

/// χ₇₅ on `region` from the theta-built Δ₅, no scalar prefactors.
pub fn chi75(region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let subs: Vec<VariableSubstitution> = chi75_substitutions().into_iter().map(|(_, s)| s).collect();
    let probe = delta5_theta(TruncRegion::square(12))?;
    let need = required_source(&probe, &subs, region)?;
    let d5 = delta5_theta(need)?;
    product_of_images(&d5, &subs, region)
}

/// A series together with a rational scalar: the value is `scalar·series`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scaled {
    pub series: FourierSeries3,
    pub scalar: Ratio<BigInt>,
}

/// `[F]_p = ∏ᵢ F|_k Mᵢ` on `region`. `F` must already cover the source box
/// (see [`required_source`]).
pub fn mult_hecke(f: &FourierSeries3, p: i64, k: i64, region: TruncRegion) -> Result<Scaled, HeckeError> {
    let reps = coset_reps(p);
    let subs: Vec<VariableSubstitution> = reps.iter().map(|r| r.substitution()).collect::<Result<_, _>>()?;
    let series = product_of_images(f, &subs, region)?;
    let scalar = reps.iter().fold(Ratio::one(), |acc, r| acc * qpow(r.det_d(), -k));
    Ok(Scaled { series, scalar })
}

/// Substitutions of `coset_reps(p)`.
pub fn coset_substitutions(p: i64) -> Result<Vec<VariableSubstitution>, HeckeError> {
    coset_reps(p).iter().map(|r| r.substitution().map_err(HeckeError::from)).collect()
}

/// `Σᵢ μ^{2k−3} det(Dᵢ)^{−k} F(Mᵢ⟨Z⟩)` on `region`; errors when the sum is
/// not integral.
pub fn additive_tp(f: &FourierSeries3, p: i64, k: i64, region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let reps = coset_reps(p);
    let terms: Vec<(i64, FourierSeries3)> = reps
        .par_iter()
        .map(|r| {
            let s = substitute(f, &r.substitution()?, region)?;
            Ok((2 * k - 3 - k * log_p(p, r.det_d()), s))
        })
        .collect::<Result<_, HeckeError>>()?;
    let tmin = terms.iter().map(|(t, _)| *t).min().unwrap();
    let mut acc = FourierSeries3::zero(region);
    for (t, s) in &terms {
        acc = acc.add(&s.scale_int(&BigInt::from(p).pow((t - tmin) as u32)));
    }
    if tmin >= 0 {
        Ok(acc.scale_int(&BigInt::from(p).pow(tmin as u32)))
    } else {
        let den = BigInt::from(p).pow((-tmin) as u32);
        acc.div_exact(&den)
            .ok_or_else(|| HeckeError::NonIntegralImage(format!("sum not divisible by {p}^{}", -tmin)))
    }
}

/// Coefficients of an index-1 form as a function of `N = 4n − l²`.
pub fn disc_coeffs(phi: &JacobiSeries) -> Result<DiscTable, HeckeError> {
    if phi.index2 != 2 {
        return Err(HeckeError::IndexNotOne(format!("index2 = {}", phi.index2)));
    }
    let mut map: BTreeMap<i64, BigInt> = BTreeMap::new();
    for ((n2, l2), c) in phi.iter() {
        if n2 % 2 != 0 || l2 % 2 != 0 {
            return Err(HeckeError::IndexNotOne(format!("half-integral term at ({n2}/2, {l2}/2)")));
        }
        let (n, l) = (n2 / 2, l2 / 2);
        let key = 4 * n - l * l;
        match map.get(&key) {
            Some(v) if v != c => {
                return Err(HeckeError::IndexNotOne(format!("coefficient at ({n}, {l}) differs from N = {key}")));
            }
            _ => {
                map.insert(key, c.clone());
            }
        }
    }
    let kmax = phi.nmax2().div_euclid(2);
    let floor = map.keys().next().copied().unwrap_or(0);
    let max = 4 * kmax - 1;
    // every row must carry every value its discriminants demand
    let nlo = phi.valuation2().map(|v| v.div_euclid(2)).unwrap_or(0);
    for n in nlo..=kmax {
        let top = 4 * n - floor;
        if top < 0 {
            continue;
        }
        let r = num_integer::Roots::sqrt(&top);
        for l in -r..=r {
            let want = map.get(&(4 * n - l * l)).cloned().unwrap_or_default();
            if phi.coeff(n, l) != want {
                return Err(HeckeError::IndexNotOne(format!("row {n} misses r^{l}")));
            }
        }
    }
    Ok(DiscTable::new(map, floor, max))
}

/// Middle-term convention of `T₀(p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum T0Variant {
    /// `p³c(p²N) + p(−N/p)c(N) + c(N/p²)` (weight 0).
    Character,
    /// `p³c(p²N) + pc(N) + c(N/p)`, no character.
    Untwisted,
}

fn c_div(c: &DiscTable, n: i64, k: i64) -> Result<BigInt, HeckeError> {
    if n % k == 0 {
        Ok(c.get(n / k)?)
    } else {
        Ok(BigInt::zero())
    }
}

/// `T₀(p)` on an index-1 form of weight `k` (`k = 0` or `k ≥ 3`). For
/// `k > 0` the value is `p^{k−3}(c(p²N) + p^{k−2}χc(N) + p^{2k−3}c(N/p²))`.
pub fn jacobi_t0(phi: &JacobiSeries, p: i64, k: i64, variant: T0Variant) -> Result<JacobiSeries, HeckeError> {
    if k != 0 && k < 3 {
        return Err(HeckeError::UnsupportedWeight(k));
    }
    let c = disc_coeffs(phi)?;
    let p2 = p * p;
    let nmax = c.max.div_euclid(4 * p2);
    // c(N/p²) reaches down to p²·floor
    let floor_out = p2 * c.floor.min(0);
    let mut out = JacobiSeries::zero(2 * nmax, k, 2);
    let big = |x: i64| BigInt::from(x);
    let pw = |e: i64| BigInt::from(p).pow(e as u32);
    for n in floor_out.div_euclid(4)..=nmax {
        let top = 4 * n - floor_out;
        if top < 0 {
            continue;
        }
        let r = num_integer::Roots::sqrt(&top);
        for l in -r..=r {
            let nn = 4 * n - l * l;
            let (ch, last) = match variant {
                T0Variant::Character => (chi(nn, p), c_div(&c, nn, p2)?),
                T0Variant::Untwisted => (1, c_div(&c, nn, p)?),
            };
            let v = if k == 0 {
                big(p * p2) * c.get(p2 * nn)? + big(p * ch) * c.get(nn)? + last
            } else {
                pw(k - 3) * (c.get(p2 * nn)? + big(ch) * pw(k - 2) * c.get(nn)? + pw(2 * k - 3) * last)
            };
            out.add_term(2 * n, 2 * l, &v);
        }
    }
    Ok(out)
}

/// How the `s^j` block of a lift weighs the divisor `a | (n, l, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LiftWeight {
    /// `j/a`: the logarithm of a Borcherds product.
    Borcherds,
    /// `a^{k−1}`: the Maass lift.
    Maass(i64),
}

/// `Σ_{a|(n,l,j)} w(a) c((4nj − l²)/a²)` as a Jacobi series, known for
/// `4nj ≤ c.max`.
fn lift_block(c: &DiscTable, j: i64, w: LiftWeight) -> Result<JacobiSeries, HeckeError> {
    let nmax = c.max.div_euclid(4 * j);
    let low = c.floor.min(c.floor * j * j);
    let nlo = low.div_euclid(4 * j);
    let mut out = JacobiSeries::zero(2 * nmax, 0, 2 * j);
    for n in nlo..=nmax {
        let top = 4 * n * j - low;
        if top < 0 {
            continue;
        }
        let r = num_integer::Roots::sqrt(&top);
        for l in -r..=r {
            let g = n.abs().gcd(&l.abs()).gcd(&j);
            let mut v = BigInt::zero();
            for a in (1..=g).filter(|a| g % a == 0) {
                let x = c.get((4 * n * j - l * l) / (a * a))?;
                if x.is_zero() {
                    continue;
                }
                let wt = match w {
                    LiftWeight::Borcherds => BigInt::from(j / a),
                    LiftWeight::Maass(k) => BigInt::from(a).pow((k - 1) as u32),
                };
                v += wt * x;
            }
            out.add_term(2 * n, 2 * l, &v);
        }
    }
    Ok(out)
}

/// `φ̃|T₋(m)` as the `s^m` block. For `k ≥ 2` this is
/// `m^{k−2} Σ_a a^{k−1} c(nm/a², l/a)`; for `k = 0` it is the product
/// logarithm normalization `Σ_{ad=m} d·c(nm/a², l/a)`.
pub fn tminus_lift_term(phi: &JacobiSeries, k: i64, m: i64, region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let c = disc_coeffs(phi)?;
    let block = match k {
        0 => lift_block(&c, m, LiftWeight::Borcherds)?,
        k if k >= 2 => lift_block(&c, m, LiftWeight::Maass(k))?.scale(&BigInt::from(m).pow((k - 2) as u32)),
        _ => return Err(HeckeError::UnsupportedWeight(k)),
    };
    let known = TruncRegion::new(2 * block.nmax2(), region.mmax4);
    Ok(block.to_fourier(4 * m, known).truncate(region))
}

/// Maass lift `Σ_{a|(n,l,m)} a^{k−1} c(nm/a², l/a)` for `n, m ≥ 1`.
pub fn maass_lift_k(phi: &JacobiSeries, k: i64, region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    if k < 2 {
        return Err(HeckeError::UnsupportedWeight(k));
    }
    let c = disc_coeffs(phi)?;
    let mmax = region.mmax4.div_euclid(4);
    let nmax = region.nmax4.div_euclid(4);
    let blocks: Vec<FourierSeries3> = (1..=mmax)
        .into_par_iter()
        .map(|m| {
            let b = lift_block(&c, m, LiftWeight::Maass(k))?;
            if b.nmax2() < 2 * nmax {
                return Err(HeckeError::Fourier(FourierError::RegionTooLarge {
                    requested: region,
                    available: TruncRegion::new(2 * b.nmax2(), region.mmax4),
                }));
            }
            let b = b.truncate(2 * nmax);
            Ok(b.to_fourier(4 * m, region))
        })
        .collect::<Result<_, _>>()?;
    let mut out = FourierSeries3::zero(region);
    for b in blocks {
        for (e, v) in b.iter() {
            if e.n4 >= 4 {
                out.add_term(*e, v);
            }
        }
    }
    Ok(out)
}

/// `ψ̃·exp(−Σ_{m≥1} m⁻¹ φ̃|T₋(m))` on `region`, with `ψ̃` a series in `q`
/// alone and `φ` of weight 0 and index 1.
pub fn exp_lift(psi: &FourierSeries3, phi0: &JacobiSeries, region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let c = disc_coeffs(phi0)?;
    let mut psi_j = JacobiSeries::zero(psi.region().nmax4.div_euclid(2), 0, 0);
    for (e, v) in psi.iter() {
        let re = v.to_real().ok_or_else(|| HeckeError::NonIntegralLiftCoefficient("complex ψ".into()))?;
        if e.m4 != 0 || e.n4 % 2 != 0 || e.l4 % 2 != 0 {
            return Err(HeckeError::NonIntegralLiftCoefficient(format!("ψ has a term at {e}")));
        }
        psi_j.add_term(e.n4 / 2, e.l4 / 2, re);
    }
    let mmax = region.mmax4.div_euclid(4);
    let t: Vec<JacobiSeries> =
        (1..=mmax).into_par_iter().map(|j| lift_block(&c, j, LiftWeight::Borcherds)).collect::<Result<_, _>>()?;
    let mut e_blocks: Vec<JacobiSeries> = vec![JacobiSeries::one(1 << 30)];
    for m in 1..=mmax {
        let mut acc: Option<JacobiSeries> = None;
        for j in 1..=m {
            let term = t[(j - 1) as usize].mul(&e_blocks[(m - j) as usize]);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        let acc = acc.unwrap();
        let mut em = JacobiSeries::zero(acc.nmax2(), 0, 2 * m);
        let mm = BigInt::from(-m);
        for ((n2, l2), v) in acc.iter() {
            let (q, r) = v.div_rem(&mm);
            if !r.is_zero() {
                return Err(HeckeError::NonIntegralLiftCoefficient(format!(
                    "s^{m} block at q^({n2}/2) r^({l2}/2)"
                )));
            }
            em.add_term(*n2, *l2, &q);
        }
        e_blocks.push(em);
    }
    let mut known = region.nmax4;
    let mut terms: Vec<(ExpTriple, GaussInt)> = Vec::new();
    for (m, em) in e_blocks.iter().enumerate() {
        let g = psi_j.mul(em);
        known = known.min(2 * g.nmax2());
        for ((n2, l2), v) in g.iter() {
            terms.push((ExpTriple::new(2 * n2, 2 * l2, 4 * m as i64), GaussInt::from(v.clone())));
        }
    }
    if known < region.nmax4 {
        return Err(HeckeError::Fourier(FourierError::RegionTooLarge {
            requested: region,
            available: TruncRegion::new(known, region.mmax4),
        }));
    }
    Ok(FourierSeries3::from_terms(terms.into_iter().filter(|(e, _)| region.contains(e)), region))
}

/// Outcome of the lift/Hecke commutation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftCommutation {
    pub region: TruncRegion,
    pub terms_compared: usize,
    pub mismatch: Option<Mismatch>,
}

/// `φ₁₂,₁ = Δ₁₂·φ₀,₁` to `q^order`.
pub fn phi12_1(f: &DiscTable, order: i64) -> Result<JacobiSeries, HeckeError> {
    let phi = phi01(f, order)?;
    Ok(JacobiSeries::from_q(&delta12(order)).mul(&phi).truncate(2 * order).with_meta(12, 2))
}

/// `Lift(φ)|T(p) = Lift(φ|(p^{3−k}T₀(p) + p^{k−1} + p^{k−2}))` for
/// `φ = φ₁₂,₁`, compared on `region`.
pub fn verify_lift_commutation(p: i64, region: TruncRegion) -> Result<LiftCommutation, HeckeError> {
    let k = 12;
    let subs = coset_substitutions(p)?;
    let mut need = region;
    for s in &subs {
        let r = s.source_region_for(&region).ok_or_else(|| FourierError::UncoveredTarget {
            reason: "substitution shape has no coverage rule".into(),
        })?;
        need = TruncRegion::new(need.nmax4.max(r.nmax4), need.mmax4.max(r.mmax4));
    }
    let d_lhs = need.nmax4.div_euclid(4) * need.mmax4.div_euclid(4) * 4;
    let d_rhs = region.nmax4.div_euclid(4) * region.mmax4.div_euclid(4) * 4;
    let order = (d_lhs / 4 + 2).max(p * p * (d_rhs / 4 + 2));
    let f = f_table(4 * order + 4)?;
    let phi = phi12_1(&f, order)?;
    let lhs = additive_tp(&maass_lift_k(&phi, k, need)?, p, k, region)?;
    let t0 = jacobi_t0(&phi, p, k, T0Variant::Character)?;
    let pw = |e: i64| BigInt::from(p).pow(e as u32);
    let ez = t0.scale(&BigInt::one()).truncate(t0.nmax2());
    let ez = {
        let mut s = JacobiSeries::zero(ez.nmax2(), k, 2);
        for ((n2, l2), v) in ez.iter() {
            let (q, r) = v.div_rem(&pw(k - 3));
            if !r.is_zero() {
                return Err(HeckeError::NonIntegralImage("T0 image not divisible by p^(k-3)".into()));
            }
            s.add_term(*n2, *l2, &q);
        }
        s
    };
    let psi = ez.add(&phi.scale(&(pw(k - 1) + pw(k - 2))));
    let rhs = maass_lift_k(&psi, k, region)?;
    let mismatch = series_equal(&lhs, &rhs, &region)?;
    Ok(LiftCommutation { region, terms_compared: lhs.len().max(rhs.len()), mismatch })
}

/// Quadratic polynomial in `(z₁, z₂, z₃)`, keyed by exponent vectors.
type Poly = BTreeMap<[u8; 3], Q>;

fn poly_from_aff(a: &Aff) -> Poly {
    let mut p = Poly::new();
    for (i, c) in a.iter().take(3).enumerate() {
        let mut e = [0u8; 3];
        e[i] = 1;
        p.insert(e, *c);
    }
    p.insert([0, 0, 0], a[3]);
    p.retain(|_, c| !c.is_zero());
    p
}

fn poly_mul(x: &Poly, y: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ex, cx) in x {
        for (ey, cy) in y {
            let e = [ex[0] + ey[0], ex[1] + ey[1], ex[2] + ey[2]];
            *out.entry(e).or_insert_with(Q::zero) += *cx * *cy;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn poly_add(x: &Poly, y: &Poly, s: Q) -> Poly {
    let mut out = x.clone();
    for (e, c) in y {
        *out.entry(*e).or_insert_with(Q::zero) += *c * s;
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// A rational quadratic divisor `(z₂² − z₁z₃)d + cz₃ + bz₂ + az₁ + e = 0`,
/// `ℓ = (e, a, b, c, d)` primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadDivisor {
    pub ell: [i64; 5],
}

impl QuadDivisor {
    pub fn new(ell: [i64; 5]) -> Self {
        let g = ell.iter().fold(0i64, |g, x| g.gcd(x));
        let g = if g == 0 { 1 } else { g };
        QuadDivisor { ell: ell.map(|x| x / g) }
    }

    pub fn discriminant(&self) -> i64 {
        let [e, a, b, c, d] = self.ell;
        b * b - 4 * d * e - 4 * a * c
    }

    /// `M(H_ℓ) = {M⟨Z⟩ : Z ∈ H_ℓ}`, computed by pulling the equation back
    /// along `M⁻¹⟨Z'⟩ = A⁻¹(Z'D − B)`.
    pub fn image(&self, rep: &CosetRep) -> QuadDivisor {
        let [e, a, b, c, d] = self.ell;
        let zd = rmul(&z_matrix(), &to_q(&rep.d));
        let mut neg_b = to_q(&rep.b);
        for row in neg_b.iter_mut() {
            for x in row.iter_mut() {
                *x = -*x;
            }
        }
        let w = lmul(&inv2(&rep.a), &add_const(&zd, &neg_b));
        let [w1, w2, w3] = sym_entries(&w).map(|x| poly_from_aff(&x));
        let det_part = poly_add(&poly_mul(&w2, &w2), &poly_mul(&w1, &w3), -Q::one());
        let mut eq = Poly::new();
        eq = poly_add(&eq, &det_part, Q::from(d));
        eq = poly_add(&eq, &w3, Q::from(c));
        eq = poly_add(&eq, &w2, Q::from(b));
        eq = poly_add(&eq, &w1, Q::from(a));
        eq = poly_add(&eq, &poly_from_aff(&aff_const(Q::one())), Q::from(e));
        let get = |k: [u8; 3]| eq.get(&k).copied().unwrap_or_else(Q::zero);
        let dd = get([0, 2, 0]);
        assert_eq!(get([1, 0, 1]), -dd, "pulled-back equation is not of Humbert shape");
        for k in [[2, 0, 0], [0, 0, 2], [1, 1, 0], [0, 1, 1]] {
            assert!(get(k).is_zero(), "pulled-back equation is not of Humbert shape");
        }
        let coeffs = [get([0, 0, 0]), get([1, 0, 0]), get([0, 1, 0]), get([0, 0, 1]), dd];
        let den = coeffs.iter().fold(1i64, |l, x| l.lcm(x.denom()));
        QuadDivisor::new(coeffs.map(|x| (x * den).to_integer()))
    }
}

/// `(α, β)`: representatives sending `z₂ = 0`, resp. `pz₂ = 1`, to a
/// divisor of discriminant 1.
pub fn humbert_count(p: i64) -> (usize, usize) {
    let h1 = QuadDivisor::new([0, 0, 1, 0, 0]);
    let hp = QuadDivisor::new([-1, 0, p, 0, 0]);
    let reps = coset_reps(p);
    let alpha = reps.iter().filter(|r| h1.image(r).discriminant() == 1).count();
    let beta = reps.iter().filter(|r| hp.image(r).discriminant() == 1).count();
    (alpha, beta)
}

/// `N[W]` for `N = (n, l/2; l/2, m)` as the triple `(n', l', m')`.
fn bracket(n: i64, l: i64, m: i64, w: &Mat2) -> (i64, i64, i64) {
    let (w11, w12, w21, w22) = (w[0][0], w[0][1], w[1][0], w[1][1]);
    (
        w11 * w11 * n + w11 * w21 * l + w21 * w21 * m,
        2 * w11 * w12 * n + (w11 * w22 + w12 * w21) * l + 2 * w21 * w22 * m,
        w12 * w12 * n + w12 * w22 * l + w22 * w22 * m,
    )
}

/// Which `U` the sums of the assembly formula run over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum USet {
    /// `diag(1, p)` and `(p, 0; −b, 1)`: the `A`-blocks of the coset list.
    Cosets,
    /// `(p, 0; 0, 1)` and `(p, 0; −b, 1)`.
    DiagP1,
}

fn u_set(p: i64, which: USet) -> Vec<Mat2> {
    let first = match which {
        USet::Cosets => [[1, 0], [0, p]],
        USet::DiagP1 => [[p, 0], [0, 1]],
    };
    std::iter::once(first).chain((0..p).map(|b| [[p, 0], [-b, 1]])).collect()
}

/// `f̃(N)`: `f(4 det N)` on the positive cone, 0 elsewhere.
fn f_tilde(f: &DiscTable, t: Option<(i64, i64, i64)>) -> Result<BigInt, HeckeError> {
    match t {
        Some((n, l, m)) if RangeRule::PositiveCone.admits(n, l, m) => Ok(f.get(4 * n * m - l * l)?),
        _ => Ok(BigInt::zero()),
    }
}

/// `k·N[U⁻¹]` when integral.
fn scaled_inverse_bracket(n: i64, l: i64, m: i64, u: &Mat2, k: i64) -> Option<(i64, i64, i64)> {
    let adj = [[u[1][1], -u[0][1]], [-u[1][0], u[0][0]]];
    let d2 = det2(u) * det2(u);
    let (a, b, c) = bracket(k * n, k * l, k * m, &adj);
    (a % d2 == 0 && b % d2 == 0 && c % d2 == 0).then(|| (a / d2, b / d2, c / d2))
}

/// Exponent of `(1 − qⁿrˡsᵐ)` in `[Δ₅]_p` collected over the coset list.
pub fn assembled_exponent(f: &DiscTable, p: i64, which: USet, n: i64, l: i64, m: i64) -> Result<BigInt, HeckeError> {
    let us = u_set(p, which);
    let pb = |x: i64| BigInt::from(x);
    let mut e = pb(p * p * p) * f_tilde(f, Some((p * n, p * l, p * m)))?;
    for u in &us {
        e += pb(p) * f_tilde(f, scaled_inverse_bracket(n, l, m, u, p))?;
    }
    let divisible = n % p == 0 && l % p == 0 && m % p == 0;
    if divisible {
        e += f_tilde(f, Some((n / p, l / p, m / p)))?;
    } else {
        for u in &us {
            e += f_tilde(f, scaled_inverse_bracket(n, l, m, u, 1))?;
        }
        e += pb(p * p) * f_tilde(f, Some((n, l, m)))?;
    }
    Ok(e)
}

/// Sum over the coset list of the images of the Weyl monomial `(qrs)^{1/2}`,
/// in quarter units.
pub fn assembled_weyl(p: i64) -> Result<ExpTriple, HeckeError> {
    let e0 = ExpTriple::new(2, 2, 2);
    let mut tot = [Q::zero(); 3];
    for rep in coset_reps(p) {
        let rows = rep.moebius();
        for (j, t) in tot.iter_mut().enumerate() {
            *t += (0..3).map(|i| rows[i][j] * Q::from([e0.n4, e0.l4, e0.m4][i])).sum::<Q>();
        }
    }
    let q = tot.map(|x| if x.is_integer() { Some(x.to_integer()) } else { None });
    match q {
        [Some(a), Some(b), Some(c)] => Ok(ExpTriple::new(a, b, c)),
        _ => Err(FourierError::InadmissibleSubstitution { at: Some(e0), reason: "Weyl image off quarter units".into() }
            .into()),
    }
}

/// `[Δ₅]_p` up to a constant, as a product with exponents collected over
/// the coset list; complete for factors with `n ≤ nmax`, `m ≤ mmax`.
pub fn assembled_spec(f: &DiscTable, p: i64, which: USet, nmax: i64, mmax: i64) -> Result<ProductSpec, HeckeError> {
    let mut entries = BTreeMap::new();
    let nlo = -p * p;
    for m in 0..=mmax {
        for n in nlo..=nmax {
            let top = 4 * n * m + p * p;
            if top < 0 {
                continue;
            }
            let r = num_integer::Roots::sqrt(&top);
            for l in -r..=r {
                if n == 0 && m == 0 && l == 0 {
                    continue;
                }
                let e = assembled_exponent(f, p, which, n, l, m)?;
                if !e.is_zero() {
                    entries.insert((n, l, m), e);
                }
            }
        }
    }
    let w = assembled_weyl(p)?;
    Ok(ProductSpec {
        weyl: FourierSeries3::poly(&[(w, 1)]),
        table: ExponentTable::Triple(TripleTable::new(entries, nmax, mmax)),
        index_rule: IndexRule::Discriminant,
        range_rule: RangeRule::Listed,
    })
}

/// Evaluate the assembled product on `region`, growing the listed table
/// until it covers every factor the box meets.
pub fn build_assembled(f: &DiscTable, p: i64, which: USet, region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let w = assembled_weyl(p)?;
    let mut nmax = (region.nmax4 - w.n4).div_euclid(4).max(0);
    let mmax = (region.mmax4 - w.m4).div_euclid(4).max(0);
    loop {
        let spec = assembled_spec(f, p, which, nmax, mmax)?;
        match eval_product(&spec, region) {
            Err(BorcherdsError::InsufficientFRange { need, .. }) if need > nmax => nmax = need,
            r => return Ok(r?),
        }
    }
}

/// Divide by the coefficient at `e` when it is a unit of `ℤ[i]`.
pub fn normalize_at(s: &FourierSeries3, e: &ExpTriple) -> Option<FourierSeries3> {
    let c = s.coeff(e);
    if c.norm() != BigInt::one() {
        return None;
    }
    Some(s.scale(&c.conj()))
}

/// χ₇₅ scaled so that its product expansion starts with `+1`: the
/// coefficient at the Weyl pivot `q⁷r⁵s⁶` becomes 1.
pub fn chi75_normalized(region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let c = chi75(region)?;
    normalize_at(&c, &ExpTriple::from_q(7, 5, 6))
        .ok_or_else(|| HeckeError::NonIntegralImage("χ₇₅ pivot coefficient is not a unit".into()))
}

/// Δ₃₅ from χ₇₅ alone: `χ₇₅ / Δ₅⁸` with the theta-built Δ₅, scaled to
/// coefficient 1 at `q³rs²`. No exponent table enters.
pub fn delta35_from_chi75(region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let big = TruncRegion::new(region.nmax4 + 16, region.mmax4 + 16);
    let c = chi75(big)?;
    let d5 = delta5_theta(TruncRegion::new(big.nmax4 - 14, big.mmax4 - 14))?;
    let q = c.div_series(&d5.pow(8))?;
    normalize_at(&q, &ExpTriple::from_q(3, 1, 2))
        .map(|s| s.truncate(region))
        .ok_or_else(|| HeckeError::NonIntegralImage("χ₇₅/Δ₅⁸ has no unit coefficient at q³rs²".into()))
}

/// `q⁶r⁵s⁶(q − s)`: Weyl factor of `Δ₃₅Δ₅⁸`.
pub fn chi75_weyl() -> FourierSeries3 {
    crate::borcherds::delta35_weyl().mul(&FourierSeries3::poly(&[(ExpTriple::new(16, 16, 16), 1)]))
}

/// `|x|` for a rational scalar, as `(num, den)` strings, for reports.
pub fn scalar_parts(x: &Ratio<BigInt>) -> (String, String) {
    (x.numer().abs().to_string(), x.denom().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta35_two_routes_agree() {
        let region = TruncRegion::new(16, 16);
        let a = delta35_from_chi75(region).unwrap();
        let f = crate::borcherds::f_table(120).unwrap();
        let b = crate::borcherds::build_delta35(&f, region).unwrap();
        let r = a.region().intersect(&b.region());
        assert!(!a.truncate(r).is_empty());
        assert_eq!(crate::fourier::series_equal(&a, &b, &r).unwrap(), None);
    }

    #[test]
    fn coset_counts() {
        for p in [2, 3, 5] {
            assert_eq!(coset_reps(p).len() as i64, (p * p + 1) * (p + 1));
        }
        let fams: Vec<usize> = [CosetFamily::Scalar, CosetFamily::Translation, CosetFamily::AFamily, CosetFamily::BFamily]
            .iter()
            .map(|f| coset_reps(2).iter().filter(|r| r.family == *f).count())
            .collect();
        assert_eq!(fams, vec![1, 8, 2, 4]);
        assert!(coset_reps(3).iter().all(|r| r.is_similitude() && r.mu == 3));
    }

    #[test]
    fn scalar_rep_doubles() {
        let r = &coset_reps(2)[0];
        let x = FourierSeries3::poly(&[(ExpTriple::new(2, 2, 2), 1)]);
        let (y, s) = slash_factor(&x, r, 5, TruncRegion::exact()).unwrap();
        assert_eq!(y, FourierSeries3::poly(&[(ExpTriple::new(4, 4, 4), 1)]));
        assert_eq!(s, Ratio::one());
    }

    #[test]
    fn cosets_match_the_fifteen() {
        let mut a: Vec<_> = coset_substitutions(2).unwrap().into_iter().map(|s| s.quarters()).collect();
        let mut b: Vec<_> = chi75_substitutions().into_iter().map(|(_, s)| s.quarters()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn p3_is_inadmissible() {
        assert!(matches!(
            coset_substitutions(3),
            Err(HeckeError::Fourier(FourierError::InadmissibleSubstitution { .. }))
        ));
    }

    #[test]
    fn humbert() {
        assert_eq!(humbert_count(2), (9, 1));
        assert_eq!(humbert_count(3), (16, 1));
    }

    #[test]
    fn humbert_discriminants_scale() {
        for p in [2, 3] {
            let h = QuadDivisor::new([0, 0, 1, 0, 0]);
            for r in coset_reps(p) {
                let d = h.image(&r).discriminant();
                assert!(d == 1 || d == p * p, "D = {d}");
            }
        }
    }

    #[test]
    fn weyl_images() {
        assert_eq!(assembled_weyl(2).unwrap(), ExpTriple::from_q(7, 5, 6));
        assert_eq!(assembled_weyl(3).unwrap(), ExpTriple::from_q(18, 9, 12));
    }

    #[test]
    fn additive_on_constant() {
        let one = FourierSeries3::one(TruncRegion::exact());
        let t = additive_tp(&one, 2, 4, TruncRegion::square(8)).unwrap();
        // 2^5 (1 + 8·2^{-8} + 6·2^{-4})
        let want = BigInt::from(32) + BigInt::from(1) + BigInt::from(12);
        assert_eq!(t.coeff_real(&ExpTriple::default()), want);
    }

    #[test]
    fn t0_of_phi01() {
        let f = f_table(40).unwrap();
        let phi = phi01(&f, 9).unwrap();
        let t = jacobi_t0(&phi, 2, 0, T0Variant::Character).unwrap();
        assert_eq!(t.coeff(-1, 0), BigInt::from(1));
        assert_eq!(t.coeff(0, 0), BigInt::from(90));
        assert_eq!(t.coeff(0, 1), BigInt::from(2));
        assert_eq!(t.coeff(0, 2), BigInt::from(1));
        let zero = JacobiSeries::zero(8, 0, 2);
        assert!(jacobi_t0(&zero, 2, 0, T0Variant::Character).unwrap().is_empty());
    }

    #[test]
    fn tminus_one_is_phi() {
        let f = f_table(40).unwrap();
        let phi = phi01(&f, 6).unwrap();
        let t = tminus_lift_term(&phi, 0, 1, TruncRegion::new(16, 8)).unwrap();
        assert_eq!(t, phi.to_fourier(4, TruncRegion::new(16, 8)).truncate(TruncRegion::new(16, 8)));
    }

    #[test]
    fn index_two_rejected() {
        let s = JacobiSeries::zero(4, 0, 4);
        assert!(matches!(disc_coeffs(&s), Err(HeckeError::IndexNotOne(_))));
    }
}
