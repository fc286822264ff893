//! The rank-3 hyperbolic lattices `M₁,₀ ⊃ M₁,I ⊃ M₁,II`, their reflection
//! groups, the bridge from Fourier monomials to lattice vectors, and
//! checks on generalized Cartan matrices.
//!
//! Vectors are written in the basis `(f₂, f₋₂, f₃)` with Gram matrix
//! `((0,−1,0), (−1,0,0), (0,0,2))`.

use crate::borcherds::DiscTable;
use crate::fourier::{ExpTriple, FourierSeries3, GaussInt, TruncRegion};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

type Q = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("({0}, {0}) = {1}, not 2")]
    NotARoot(LatticeVec, Q),
    #[error("matrix has rank {0}, not 3")]
    RankNotThree(usize),
    #[error("descent did not reach the chamber from {0}")]
    DescentFailure(LatticeVec),
    #[error("bad Cartan data: {0}")]
    Data(String),
}

/// Coordinates in `(f₂, f₋₂, f₃)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeVec(pub [Q; 3]);

impl fmt::Display for LatticeVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.0;
        write!(f, "{a}f2 + {b}f-2 + {c}f3")
    }
}

impl LatticeVec {
    pub fn new(f2: Q, fm2: Q, f3: Q) -> Self {
        LatticeVec([f2, fm2, f3])
    }

    pub fn int(f2: i64, fm2: i64, f3: i64) -> Self {
        LatticeVec([Q::from(f2), Q::from(fm2), Q::from(f3)])
    }

    pub fn add(&self, o: &LatticeVec) -> LatticeVec {
        LatticeVec([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: &LatticeVec) -> LatticeVec {
        self.add(&o.scale(-Q::one()))
    }

    pub fn scale(&self, c: Q) -> LatticeVec {
        LatticeVec(self.0.map(|x| x * c))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }
}

pub const F2: LatticeVec = LatticeVec([Q::new_raw(1, 1), Q::new_raw(0, 1), Q::new_raw(0, 1)]);
pub const FM2: LatticeVec = LatticeVec([Q::new_raw(0, 1), Q::new_raw(1, 1), Q::new_raw(0, 1)]);
pub const F3: LatticeVec = LatticeVec([Q::new_raw(0, 1), Q::new_raw(0, 1), Q::new_raw(1, 1)]);

/// `(x, y)` for the Gram matrix above.
pub fn pair(x: &LatticeVec, y: &LatticeVec) -> Q {
    -(x.0[0] * y.0[1] + x.0[1] * y.0[0]) + Q::from(2) * x.0[2] * y.0[2]
}

/// `s_δ(x) = x − (δ, x)δ` for a root `δ` of square 2.
pub fn reflect(x: &LatticeVec, delta: &LatticeVec) -> Result<LatticeVec, LatticeError> {
    let d2 = pair(delta, delta);
    if d2 != Q::from(2) {
        return Err(LatticeError::NotARoot(*delta, d2));
    }
    Ok(x.sub(&delta.scale(pair(delta, x))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    M10,
    M1I,
    M1II,
}

impl Tag {
    pub fn all() -> [Tag; 3] {
        [Tag::M10, Tag::M1I, Tag::M1II]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tag::M10 => "A1,0",
            Tag::M1I => "A1,I",
            Tag::M1II => "A1,II",
        }
    }
}

/// One of the three lattices, given by a basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HyperbolicLattice {
    pub tag: Tag,
    pub basis: [LatticeVec; 3],
    pub basis_labels: [&'static str; 3],
}

impl HyperbolicLattice {
    pub fn new(tag: Tag) -> Self {
        match tag {
            Tag::M10 => HyperbolicLattice { tag, basis: [F2, FM2, F3], basis_labels: ["f2", "f-2", "f3"] },
            Tag::M1I => HyperbolicLattice {
                tag,
                basis: [F2.add(&F3), F2.sub(&F3), F2.add(&FM2)],
                basis_labels: ["f2+f3", "f2-f3", "f2+f-2"],
            },
            Tag::M1II => HyperbolicLattice {
                tag,
                basis: [F2.scale(Q::from(2)), FM2.scale(Q::from(2)), F3],
                basis_labels: ["2f2", "2f-2", "f3"],
            },
        }
    }

    pub fn gram(&self) -> Vec<Vec<Q>> {
        gram_of(&self.basis)
    }

    /// Membership: integral coordinates, plus `n + l + m` even for `M₁,I`
    /// and `n, m` even for `M₁,II` (`n f₂ + l f₃ + m f₋₂`).
    pub fn contains(&self, v: &LatticeVec) -> bool {
        if !v.0.iter().all(|x| x.is_integer()) {
            return false;
        }
        let [n, m, l] = v.0.map(|x| x.to_integer());
        match self.tag {
            Tag::M10 => true,
            Tag::M1I => (n + l + m).rem_euclid(2) == 0,
            Tag::M1II => n % 2 == 0 && m % 2 == 0,
        }
    }

    /// `v ∈ M*`: integral pairing with the basis.
    pub fn in_dual(&self, v: &LatticeVec) -> bool {
        self.basis.iter().all(|b| pair(v, b).is_integer())
    }
}

/// The orthogonal vectors `P(𝓜₁,ᵢ)` to the fundamental triangle.
pub fn simple_roots(tag: Tag) -> [LatticeVec; 3] {
    match tag {
        Tag::M10 => [FM2.sub(&F2), F3, F2.sub(&F3)],
        Tag::M1I => [F2.add(&F3), F2.sub(&F3), FM2.sub(&F2)],
        Tag::M1II => [F2.scale(Q::from(2)).sub(&F3), FM2.scale(Q::from(2)).sub(&F3), F3],
    }
}

pub fn gram_of(p: &[LatticeVec]) -> Vec<Vec<Q>> {
    p.iter().map(|x| p.iter().map(|y| pair(x, y)).collect()).collect()
}

/// Weyl vectors in closed form; `None` where the closed form uses a
/// symbol outside the basis.
pub fn closed_form_weyl_vector(tag: Tag) -> Option<LatticeVec> {
    let half = Q::new(1, 2);
    match tag {
        Tag::M10 => Some(LatticeVec::new(Q::from(3), Q::from(2), -half)),
        Tag::M1I => None,
        Tag::M1II => Some(LatticeVec::new(Q::one(), Q::one(), -half)),
    }
}

/// Solve `(ρ, δ) = −1` for the three simple roots.
pub fn solve_lattice_weyl_vector(tag: Tag) -> Option<LatticeVec> {
    let p = simple_roots(tag);
    // (ρ, δ) = Σ ρ_j (e_j, δ), a 3×3 system in ρ's coordinates
    let e = [F2, FM2, F3];
    let rows: Vec<Vec<BigRational>> =
        p.iter().map(|d| e.iter().map(|ej| to_big(pair(ej, d))).collect()).collect();
    let rhs = vec![-BigRational::one(); 3];
    let x = solve_linear(&rows, &rhs)?;
    let back: Vec<Q> = x.iter().map(from_big).collect::<Option<_>>()?;
    Some(LatticeVec::new(back[0], back[1], back[2]))
}

/// The Weyl vector used for `tag`: closed form where available, else solved.
pub fn weyl_vector(tag: Tag) -> LatticeVec {
    closed_form_weyl_vector(tag).or_else(|| solve_lattice_weyl_vector(tag)).expect("simple roots span")
}

/// `(ρ, δ) = −1` for every simple root.
pub fn weyl_vector_check(tag: Tag, rho: &LatticeVec) -> bool {
    simple_roots(tag).iter().all(|d| pair(rho, d) == -Q::one())
}

fn to_big(x: Q) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

fn from_big(x: &BigRational) -> Option<Q> {
    use num_traits::ToPrimitive;
    Some(Q::new(x.numer().to_i64()?, x.denom().to_i64()?))
}

/// Row echelon form; returns the rank.
fn echelon(a: &mut [Vec<BigRational>]) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let pivot = a[r][c].clone();
        for j in c..cols {
            a[r][j] = &a[r][j] / &pivot;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

pub fn rank(m: &[Vec<BigRational>]) -> usize {
    let mut a = m.to_vec();
    echelon(&mut a)
}

/// Some solution of `A x = b`, or `None` when inconsistent.
pub fn solve_linear(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<BigRational>> =
        a.iter().zip(b).map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect()).collect();
    let r = echelon(&mut aug);
    let mut x = vec![BigRational::zero(); n];
    for row in aug.iter().take(r) {
        let lead = row.iter().position(|v| !v.is_zero())?;
        if lead == n {
            return None;
        }
        x[lead] = row[n].clone();
    }
    // pivot columns are unit; free variables stay 0
    Some(x)
}

/// `(positive, negative, zero)` eigenvalue counts of a symmetric matrix,
/// by congruence diagonalization.
pub fn inertia(m: &[Vec<BigRational>]) -> (usize, usize, usize) {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d: Vec<BigRational> = Vec::new();
    let mut k = 0;
    while k < n {
        if let Some(p) = (k..n).find(|&i| !a[i][i].is_zero()) {
            a.swap(k, p);
            for row in a.iter_mut() {
                row.swap(k, p);
            }
        } else if let Some((i, j)) = (k..n).flat_map(|i| (k..n).map(move |j| (i, j))).find(|&(i, j)| i != j && !a[i][j].is_zero()) {
            // row/col i += row/col j makes a nonzero diagonal entry
            for c in 0..n {
                let t = a[j][c].clone();
                a[i][c] += t;
            }
            for r in 0..n {
                let t = a[r][j].clone();
                a[r][i] += t;
            }
            continue;
        } else {
            break;
        }
        let piv = a[k][k].clone();
        for i in (k + 1)..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &piv;
            for c in k..n {
                let t = &f * &a[k][c];
                a[i][c] -= t;
            }
            for r in k..n {
                let t = &f * &a[r][k];
                a[r][i] -= t;
            }
        }
        d.push(piv);
        k += 1;
    }
    let pos = d.iter().filter(|x| x.is_positive()).count();
    let neg = d.iter().filter(|x| x.is_negative()).count();
    (pos, neg, n - pos - neg)
}

fn big_matrix(m: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    m.iter().map(|r| r.iter().map(|x| BigRational::from_integer(BigInt::from(*x))).collect()).collect()
}

/// Coefficients `c` with `ρ = Σ cⱼδⱼ` and `(ρ, δᵢ) = −1`, in any rank-3
/// realization of the Gram matrix.
pub fn solve_weyl_vector(m: &[Vec<i64>]) -> Result<Option<Vec<BigRational>>, LatticeError> {
    let g = big_matrix(m);
    let r = rank(&g);
    if r != 3 {
        return Err(LatticeError::RankNotThree(r));
    }
    let rhs = vec![-BigRational::one(); m.len()];
    Ok(solve_linear(&g, &rhs))
}

/// How a series' exponents are read: `exp(πi·)` indices or `exp(2πi·)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `e(πi(nz₁ + lz₂ + mz₃)) = e(−πi(a, z))`
    Pi,
    /// `e(2πi(nz₁ + lz₂ + mz₃)) = e(−2πi(α, z))`
    TwoPi,
}

/// `a = n f₂ − (l/2) f₃ + m f₋₂` for `exp(πi·)` indices `(n, l, m)`.
pub fn monomial_bridge(e: &ExpTriple) -> LatticeVec {
    LatticeVec::new(Q::new(e.n4, 2), Q::new(e.m4, 2), Q::new(-e.l4, 4))
}

pub fn monomial_bridge_inverse(v: &LatticeVec) -> Option<ExpTriple> {
    let n4 = v.0[0] * Q::from(2);
    let m4 = v.0[1] * Q::from(2);
    let l4 = v.0[2] * Q::from(-4);
    (n4.is_integer() && m4.is_integer() && l4.is_integer())
        .then(|| ExpTriple::new(n4.to_integer(), l4.to_integer(), m4.to_integer()))
}

pub fn bridge(e: &ExpTriple, conv: Convention) -> LatticeVec {
    match conv {
        Convention::Pi => monomial_bridge(e),
        Convention::TwoPi => monomial_bridge(e).scale(Q::new(1, 2)),
    }
}

pub fn bridge_inverse(v: &LatticeVec, conv: Convention) -> Option<ExpTriple> {
    match conv {
        Convention::Pi => monomial_bridge_inverse(v),
        Convention::TwoPi => monomial_bridge_inverse(&v.scale(Q::from(2))),
    }
}

/// One pair `(v, s_δ v)` breaking `c(v) = −c(s_δ v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub root: LatticeVec,
    pub at: ExpTriple,
    pub image: ExpTriple,
    pub left: GaussInt,
    pub right: GaussInt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntiInvariance {
    pub tag: Tag,
    pub pairs_checked: usize,
    pub violations: Vec<Violation>,
}

/// `c(v) = −c(s_δ v)` for every simple root and every exponent with both
/// ends inside the region (zero coefficients included).
pub fn antiinvariance_check(f: &FourierSeries3, tag: Tag, conv: Convention) -> Result<AntiInvariance, LatticeError> {
    let region = f.region();
    let mut pairs_checked = 0;
    let mut violations = Vec::new();
    for d in simple_roots(tag) {
        // every lattice point of the box, not just the support
        for e in lattice_points(f, region) {
            let v = bridge(&e, conv);
            let w = reflect(&v, &d)?;
            let Some(img) = bridge_inverse(&w, conv) else { continue };
            if !region.contains(&img) {
                continue;
            }
            pairs_checked += 1;
            let a = f.coeff(&e);
            let b = f.coeff(&img);
            if a != -b.clone() {
                violations.push(Violation { root: d, at: e, image: img, left: a, right: b });
            }
        }
    }
    Ok(AntiInvariance { tag, pairs_checked, violations })
}

/// Exponents on the support lattice of `f` inside its box: the cosets of
/// the support's lowest term, with `4nm − l² ≥ −…` left unrestricted but
/// `|l|` capped by the widest row of the support.
fn lattice_points(f: &FourierSeries3, region: TruncRegion) -> Vec<ExpTriple> {
    let Some((e0, _)) = f.iter().next() else { return Vec::new() };
    let e0 = *e0;
    let lmax = f.iter().map(|(e, _)| e.l4.abs()).max().unwrap_or(0);
    let mut out = Vec::new();
    let mut n4 = e0.n4.rem_euclid(4);
    let n_lo = f.min_n4().unwrap_or(0);
    let m_lo = f.min_m4().unwrap_or(0);
    while n4 < n_lo {
        n4 += 4;
    }
    while n4 <= region.nmax4 {
        let mut m4 = e0.m4.rem_euclid(4);
        while m4 < m_lo {
            m4 += 4;
        }
        while m4 <= region.mmax4 {
            let mut l4 = e0.l4.rem_euclid(4) - 4 * ((lmax + 4) / 4 + 1);
            while l4 <= lmax + 4 {
                let e = ExpTriple::new(n4, l4, m4);
                if region.contains(&e) {
                    out.push(e);
                }
                l4 += 4;
            }
            m4 += 4;
        }
        n4 += 4;
    }
    out
}

/// Result of folding the support of a denominator function onto the
/// fundamental chamber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenominatorStructure {
    pub tag: Tag,
    pub rho: LatticeVec,
    /// coefficient at `ρ`
    pub rho_coeff: GaussInt,
    /// `m(a)` keyed by `a`, with `m(0) = −c(ρ)/c(ρ)·…` so that `m(0) = −1`
    pub m_table: BTreeMap<LatticeVec, GaussInt>,
    /// chamber points `ρ + a` with `a ∉ M*` or `a ∉ ℝ₊𝓜`
    pub off_lattice: Vec<LatticeVec>,
    /// support vectors whose coefficient is not `det(w)·c(v₀)`
    pub folding_violations: Vec<(ExpTriple, ExpTriple)>,
    /// descents whose chamber point lies outside the box
    pub unchecked: usize,
    /// descents that did not terminate
    pub descent_failures: usize,
    pub support_size: usize,
}

impl DenominatorStructure {
    pub fn m0(&self) -> Option<GaussInt> {
        self.m_table.get(&LatticeVec::int(0, 0, 0)).cloned()
    }

    pub fn all_integral(&self) -> bool {
        self.m_table.values().all(|v| v.is_real())
    }

    pub fn unit_at_rho(&self) -> bool {
        self.rho_coeff.norm() == BigInt::one()
    }
}

/// Fold `v` into the closed chamber `{x : (x, δᵢ) ≤ 0}`; returns the chamber
/// point and `det(w)`. Each step lowers `−(v, ρ)`.
pub fn descend(v: &LatticeVec, tag: Tag) -> Result<(LatticeVec, i64), LatticeError> {
    let roots = simple_roots(tag);
    let mut x = *v;
    let mut det = 1;
    for _ in 0..10_000 {
        match roots.iter().find(|d| pair(&x, d) > Q::zero()) {
            None => return Ok((x, det)),
            Some(d) => {
                x = reflect(&x, d)?;
                det = -det;
            }
        }
    }
    Err(LatticeError::DescentFailure(*v))
}

pub fn denominator_structure(f: &FourierSeries3, tag: Tag, conv: Convention) -> Result<DenominatorStructure, LatticeError> {
    let rho = weyl_vector(tag);
    let region = f.region();
    let lat = HyperbolicLattice::new(tag);
    let rho_e = bridge_inverse(&rho, conv).ok_or(LatticeError::DescentFailure(rho))?;
    let rho_coeff = f.coeff(&rho_e);
    let mut m_table = BTreeMap::new();
    let mut off_lattice = Vec::new();
    let mut folding_violations = Vec::new();
    let mut unchecked = 0;
    let mut descent_failures = 0;
    let mut support_size = 0;
    for (e, c) in f.iter() {
        support_size += 1;
        let v = bridge(e, conv);
        let (v0, det) = match descend(&v, tag) {
            Ok(x) => x,
            Err(_) => {
                descent_failures += 1;
                continue;
            }
        };
        let Some(e0) = bridge_inverse(&v0, conv) else {
            off_lattice.push(v0);
            continue;
        };
        if !region.contains(&e0) {
            unchecked += 1;
            continue;
        }
        let c0 = f.coeff(&e0);
        if c.clone() != c0.scale(&BigInt::from(det)) {
            folding_violations.push((*e, e0));
        }
        if v0 == v {
            let a = v.sub(&rho);
            let in_cone = simple_roots(tag).iter().all(|d| pair(&a, d) <= Q::zero());
            if !lat.in_dual(&a) || !in_cone {
                off_lattice.push(v);
            }
            // c(ρ + a) = −m(a)·c(ρ)
            let m = if rho_coeff.norm() == BigInt::one() {
                -(c.mul_ref(&rho_coeff.conj()))
            } else {
                -c.clone()
            };
            m_table.insert(a, m);
        }
    }
    Ok(DenominatorStructure {
        tag,
        rho,
        rho_coeff,
        m_table,
        off_lattice,
        folding_violations,
        unchecked,
        descent_failures,
        support_size,
    })
}

/// One row of a multiplicity table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultRow {
    /// `(α, α)`
    pub norm: Q,
    pub real: bool,
    /// `α ∈ M₁,II` (only distinguished for `A₁,I`)
    pub in_m1ii: Option<bool>,
    pub multiplicity: BigInt,
    pub representative: Option<LatticeVec>,
}

/// Root multiplicities by norm. `A₁,II`: `f(−(α,α)/2)` on `M₁,II`;
/// `A₁,₀`: `f₂(−2(α,α))` on `M₁,₀*`; `A₁,I`: the same minus
/// `f(−(α,α)/2)` on `M₁,II`. Norms with no vector in the closed fundamental
/// chamber are not roots of that norm and are skipped.
pub fn mult_table(tag: Tag, f: &DiscTable, f2: &DiscTable, norm_bound: i64) -> Result<Vec<MultRow>, LatticeError> {
    let get = |t: &DiscTable, n: Q| -> Result<BigInt, LatticeError> {
        if !n.is_integer() {
            return Ok(BigInt::zero());
        }
        t.get(n.to_integer()).map_err(|e| LatticeError::Data(e.to_string()))
    };
    let two = Q::from(2);
    let mut rows = Vec::new();
    // real roots: square 2
    match tag {
        Tag::M1II => rows.push(MultRow {
            norm: two,
            real: true,
            in_m1ii: None,
            multiplicity: get(f, -two / two)?,
            representative: Some(simple_roots(tag)[2]),
        }),
        Tag::M10 => rows.push(MultRow {
            norm: two,
            real: true,
            in_m1ii: None,
            multiplicity: get(f2, -two * two)?,
            representative: Some(simple_roots(tag)[1]),
        }),
        Tag::M1I => {
            for in2 in [false, true] {
                let sub = if in2 { get(f, -two / two)? } else { BigInt::zero() };
                rows.push(MultRow {
                    norm: two,
                    real: true,
                    in_m1ii: Some(in2),
                    multiplicity: get(f2, -two * two)? - sub,
                    representative: real_root_rep(tag, in2),
                });
            }
        }
    }
    // imaginary roots: norms 0, −step, …, −bound
    let step = match tag {
        Tag::M1II => Q::from(2),
        _ => Q::new(1, 2),
    };
    let mut norm = Q::zero();
    while norm >= Q::from(-norm_bound) {
        match tag {
            Tag::M1II => {
                let Some(rep) = imaginary_rep(tag, norm, None) else {
                    norm -= step;
                    continue;
                };
                let rep = Some(rep);
                rows.push(MultRow { norm, real: false, in_m1ii: None, multiplicity: get(f, -norm / two)?, representative: rep });
            }
            Tag::M10 => {
                let Some(rep) = imaginary_rep(tag, norm, None) else {
                    norm -= step;
                    continue;
                };
                let rep = Some(rep);
                rows.push(MultRow { norm, real: false, in_m1ii: None, multiplicity: get(f2, -two * norm)?, representative: rep });
            }
            Tag::M1I => {
                for in2 in [false, true] {
                    let sub = if in2 { get(f, -norm / two)? } else { BigInt::zero() };
                    let rep = imaginary_rep(tag, norm, Some(in2));
                    if rep.is_none() {
                        continue;
                    }
                    rows.push(MultRow {
                        norm,
                        real: false,
                        in_m1ii: Some(in2),
                        multiplicity: get(f2, -two * norm)? - sub,
                        representative: rep,
                    });
                }
            }
        }
        norm -= step;
    }
    Ok(rows)
}

fn real_root_rep(tag: Tag, in_m1ii: bool) -> Option<LatticeVec> {
    let m2 = HyperbolicLattice::new(Tag::M1II);
    simple_roots(tag)
        .into_iter()
        .chain([F2.scale(Q::from(2)).sub(&F3)])
        .find(|d| m2.contains(d) == in_m1ii && HyperbolicLattice::new(tag).contains(d))
}

/// A chamber vector of the given square in the lattice carrying the
/// imaginary roots, of least height `−(α, ρ)`.
fn imaginary_rep(tag: Tag, norm: Q, in_m1ii: Option<bool>) -> Option<LatticeVec> {
    let rho = weyl_vector(tag);
    let roots = simple_roots(tag);
    let carrier = match tag {
        Tag::M1II => HyperbolicLattice::new(Tag::M1II),
        _ => HyperbolicLattice::new(Tag::M10),
    };
    let m2 = HyperbolicLattice::new(Tag::M1II);
    let b = 12i64;
    let mut best: Option<(Q, LatticeVec)> = None;
    for n in 0..=b {
        for m in 0..=b {
            for k in -4 * b..=4 * b {
                let v = LatticeVec::new(Q::from(n), Q::from(m), Q::new(k, 2));
                if v.is_zero() || pair(&v, &v) != norm {
                    continue;
                }
                let ok_lattice = match tag {
                    Tag::M1II => carrier.contains(&v),
                    _ => HyperbolicLattice::new(Tag::M10).in_dual(&v),
                };
                if !ok_lattice || !roots.iter().all(|d| pair(&v, d) <= Q::zero()) {
                    continue;
                }
                if let Some(want) = in_m1ii {
                    if m2.contains(&v) != want {
                        continue;
                    }
                }
                let h = -pair(&v, &rho);
                if best.as_ref().is_none_or(|(bh, bv)| (h, v) < (*bh, *bv)) {
                    best = Some((h, v));
                }
            }
        }
    }
    best.map(|(_, v)| v)
}

/// A named matrix from the data file.
#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
pub struct CartanData {
    pub name: String,
    pub matrix: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Deserialize)]
struct CartanFile {
    version: u32,
    matrices: Vec<CartanData>,
    parabolic: ParabolicData,
}

#[derive(Clone, Debug, Deserialize)]
struct ParabolicData {
    name: String,
    gram: Vec<Vec<i64>>,
}

const CARTAN_JSON: &str = include_str!("../data/cartan.json");

/// The twelve elliptic matrices, in a fixed order.
pub fn cartan_matrices() -> Result<Vec<CartanData>, LatticeError> {
    let file: CartanFile = serde_json::from_str(CARTAN_JSON).map_err(|e| LatticeError::Data(e.to_string()))?;
    if file.version != 1 {
        return Err(LatticeError::Data(format!("unknown version {}", file.version)));
    }
    Ok(file.matrices)
}

/// Gram matrix of `U(16) ⊕ ⟨2⟩` and its name.
pub fn parabolic_lattice() -> Result<(String, Vec<Vec<i64>>), LatticeError> {
    let file: CartanFile = serde_json::from_str(CARTAN_JSON).map_err(|e| LatticeError::Data(e.to_string()))?;
    Ok((file.parabolic.name, file.parabolic.gram))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanChecks {
    pub name: String,
    pub size: usize,
    pub symmetric: bool,
    pub diagonal_two: bool,
    pub off_diagonal_nonpositive: bool,
    pub rank_three: bool,
    pub signature_2_1: bool,
    pub weyl_vector: bool,
}

impl CartanChecks {
    pub fn all(&self) -> bool {
        self.symmetric
            && self.diagonal_two
            && self.off_diagonal_nonpositive
            && self.rank_three
            && self.signature_2_1
            && self.weyl_vector
    }

    pub fn as_list(&self) -> [(&'static str, bool); 6] {
        [
            ("symmetric", self.symmetric),
            ("diagonal 2", self.diagonal_two),
            ("off-diagonal <= 0", self.off_diagonal_nonpositive),
            ("rank 3", self.rank_three),
            ("signature (2,1)", self.signature_2_1),
            ("lattice Weyl vector", self.weyl_vector),
        ]
    }
}

pub fn check_cartan(c: &CartanData) -> CartanChecks {
    let m = &c.matrix;
    let n = m.len();
    let square = m.iter().all(|r| r.len() == n);
    let symmetric = square && (0..n).all(|i| (0..n).all(|j| m[i][j] == m[j][i]));
    let diagonal_two = square && (0..n).all(|i| m[i][i] == 2);
    let off_diagonal_nonpositive = square && (0..n).all(|i| (0..n).all(|j| i == j || m[i][j] <= 0));
    let g = big_matrix(m);
    let r = if square { rank(&g) } else { 0 };
    let rank_three = r == 3;
    let (pos, neg, _) = if symmetric { inertia(&g) } else { (0, 0, n) };
    let signature_2_1 = (pos, neg) == (2, 1);
    let weyl_vector = rank_three && matches!(solve_weyl_vector(m), Ok(Some(_)));
    CartanChecks {
        name: c.name.clone(),
        size: n,
        symmetric,
        diagonal_two,
        off_diagonal_nonpositive,
        rank_three,
        signature_2_1,
        weyl_vector,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanSuite {
    pub matrices: Vec<CartanChecks>,
    /// `gram_of(P(𝓜₁,ᵢ))` equals the stored `A₁,ᵢ`
    pub gram_matches: Vec<(Tag, bool)>,
    /// `(ρ, δ) = −1` for the closed-form or solved Weyl vectors
    pub rho_checks: Vec<(Tag, LatticeVec, bool)>,
    pub parabolic_name: String,
    pub parabolic_signature_2_1: bool,
}

impl CartanSuite {
    pub fn passed(&self) -> bool {
        self.matrices.len() == 12
            && self.matrices.iter().all(|c| c.all())
            && self.gram_matches.iter().all(|(_, ok)| *ok)
            && self.rho_checks.iter().all(|(_, _, ok)| *ok)
            && self.parabolic_signature_2_1
    }
}

pub fn cartan_suite() -> Result<CartanSuite, LatticeError> {
    let ms = cartan_matrices()?;
    let matrices: Vec<CartanChecks> = ms.par_iter().map(check_cartan).collect();
    let mut gram_matches = Vec::new();
    for tag in Tag::all() {
        let stored = ms.iter().find(|c| c.name == tag.name()).ok_or_else(|| LatticeError::Data(tag.name().into()))?;
        let g = gram_of(&simple_roots(tag));
        let ok = g.iter().zip(&stored.matrix).all(|(a, b)| a.iter().zip(b).all(|(x, y)| *x == Q::from(*y)));
        gram_matches.push((tag, ok));
    }
    let rho_checks = Tag::all()
        .into_iter()
        .map(|t| {
            let rho = weyl_vector(t);
            (t, rho, weyl_vector_check(t, &rho))
        })
        .collect();
    let (parabolic_name, pg) = parabolic_lattice()?;
    let (pos, neg, zero) = inertia(&big_matrix(&pg));
    Ok(CartanSuite {
        matrices,
        gram_matches,
        rho_checks,
        parabolic_name,
        parabolic_signature_2_1: (pos, neg, zero) == (2, 1, 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Q {
        Q::new(a, b)
    }

    #[test]
    fn reflection_basics() {
        let d = F3;
        assert_eq!(reflect(&d, &d).unwrap(), d.scale(q(-1, 1)));
        assert_eq!(reflect(&F2, &d).unwrap(), F2);
        let rho = weyl_vector(Tag::M10);
        assert_eq!(reflect(&reflect(&rho, &d).unwrap(), &d).unwrap(), rho);
        assert!(matches!(reflect(&F2, &F2), Err(LatticeError::NotARoot(..))));
    }

    #[test]
    fn grams_are_the_cartan_matrices() {
        let want: [Vec<Vec<i64>>; 3] = [
            vec![vec![2, 0, -1], vec![0, 2, -2], vec![-1, -2, 2]],
            vec![vec![2, -2, -1], vec![-2, 2, -1], vec![-1, -1, 2]],
            vec![vec![2, -2, -2], vec![-2, 2, -2], vec![-2, -2, 2]],
        ];
        for (tag, w) in Tag::all().into_iter().zip(want) {
            let g = gram_of(&simple_roots(tag));
            let g: Vec<Vec<i64>> = g.iter().map(|r| r.iter().map(|x| x.to_integer()).collect()).collect();
            assert_eq!(g, w, "{tag:?}");
        }
    }

    #[test]
    fn weyl_vectors() {
        assert!(weyl_vector_check(Tag::M10, &closed_form_weyl_vector(Tag::M10).unwrap()));
        assert!(weyl_vector_check(Tag::M1II, &closed_form_weyl_vector(Tag::M1II).unwrap()));
        assert_eq!(solve_lattice_weyl_vector(Tag::M1I), Some(LatticeVec::int(2, 1, 0)));
        assert_eq!(solve_lattice_weyl_vector(Tag::M10), closed_form_weyl_vector(Tag::M10));
        // (δ, δ)/2 is +1, not −1
        assert!(simple_roots(Tag::M10).iter().all(|d| pair(d, d) / q(2, 1) == q(1, 1)));
    }

    #[test]
    fn bridge_examples() {
        let e = ExpTriple::new(2, 2, 2);
        let a = monomial_bridge(&e);
        assert_eq!(a, LatticeVec::new(q(1, 1), q(1, 1), q(-1, 2)));
        assert_eq!(pair(&a, &a), q(-3, 2));
        assert_eq!(monomial_bridge_inverse(&a), Some(e));
        // q³rs² ↦ ρ₀
        assert_eq!(bridge(&ExpTriple::from_q(3, 1, 2), Convention::TwoPi), weyl_vector(Tag::M10));
    }

    #[test]
    fn membership() {
        let m1 = HyperbolicLattice::new(Tag::M1I);
        assert!(m1.contains(&F2.add(&F3)));
        assert!(!m1.contains(&F3));
        let m2 = HyperbolicLattice::new(Tag::M1II);
        assert!(m2.contains(&F3) && !m2.contains(&F2));
        for t in Tag::all() {
            let (p, n, z) = inertia(&big_matrix(
                &HyperbolicLattice::new(t).gram().iter().map(|r| r.iter().map(|x| x.to_integer()).collect()).collect::<Vec<_>>(),
            ));
            assert_eq!((p, n, z), (2, 1, 0));
        }
    }

    #[test]
    fn inertia_zero_diagonal() {
        let u = big_matrix(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(inertia(&u), (1, 1, 0));
        let z = big_matrix(&[vec![0, 0], vec![0, 0]]);
        assert_eq!(inertia(&z), (0, 0, 2));
    }

    #[test]
    fn descent_lands_in_chamber() {
        let rho = weyl_vector(Tag::M10);
        let v = reflect(&reflect(&rho, &F3).unwrap(), &(F2.sub(&F3))).unwrap();
        let (v0, det) = descend(&v, Tag::M10).unwrap();
        assert_eq!((v0, det), (rho, 1));
    }

    #[test]
    fn corrupted_matrix_fails() {
        let mut c = cartan_matrices().unwrap()[0].clone();
        c.matrix[0][1] += 1;
        assert!(!check_cartan(&c).all());
    }
}
