//! Verification suites: each check compares two independent constructions
//! coefficient by coefficient and records the first mismatch as a witness.
//!
//! Orders are counted from the leading monomial of the form being checked,
//! so `order = 16` on Δ₃₅ covers `q^{3}…q^{7}` rather than stopping below
//! its first term.

use crate::borcherds::{
    build_delta30, build_delta30tilde, build_delta35, build_delta5, build_f5, build_fp, build_phi5_weak,
    delta30_weyl, delta30tilde_weyl, delta35_weyl, delta5_weyl, eval_product, f2_table, f_table, fp_spec,
    fprime2_table, max_key, phi01, recover_blocks, BorcherdsError, DiscTable, FpVariant, Phi5Reading, RangeRule,
};
use crate::fourier::{
    leading_ratio, proportional_on, series_equal, substitute, ExpTriple, FourierSeries3, GaussInt, Mismatch,
    TruncRegion, VariableSubstitution,
};
use crate::hecke::{
    build_assembled, chi75, chi75_normalized, chi75_weyl, disc_coeffs, humbert_count, jacobi_t0, mult_hecke,
    required_source, verify_lift_commutation, HeckeError, T0Variant, USet,
};
use crate::jacobi::JacobiSeries;
use crate::lattice::{antiinvariance_check, cartan_suite, denominator_structure, mult_table, Convention, Tag};
use crate::theta::{delta5_theta, eta_hat, maass_lift_delta5, theta11_hat};
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
}

impl Check {
    pub fn pass(name: impl Into<String>, witness: Option<Value>) -> Self {
        Check { name: name.into(), status: Status::Pass, witness }
    }

    pub fn fail(name: impl Into<String>, witness: Value) -> Self {
        Check { name: name.into(), status: Status::Fail, witness: Some(witness) }
    }

    pub fn from_bool(name: impl Into<String>, ok: bool, witness: Value) -> Self {
        Check { name: name.into(), status: if ok { Status::Pass } else { Status::Fail }, witness: Some(witness) }
    }

    /// A check whose construction itself errored.
    pub fn error(name: impl Into<String>, e: impl fmt::Display) -> Self {
        Check::fail(name, json!({ "error": e.to_string() }))
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub order: i64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Products,
    Hecke,
    Denominator,
    Cartan,
    All,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Products => "products",
            Suite::Hecke => "hecke",
            Suite::Denominator => "denominator",
            Suite::Cartan => "cartan",
            Suite::All => "all",
        }
    }

    /// Smallest order at which every check of the suite has something to
    /// compare.
    pub fn min_order(&self) -> i64 {
        match self {
            Suite::Products => 8,
            Suite::Hecke => 12,
            Suite::Denominator => 12,
            Suite::Cartan => 4,
            Suite::All => 12,
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "products" => Ok(Suite::Products),
            "hecke" => Ok(Suite::Hecke),
            "denominator" => Ok(Suite::Denominator),
            "cartan" => Ok(Suite::Cartan),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite {s}")),
        }
    }
}

/// The `f` table shared by every check, grown when a check runs short.
#[derive(Default)]
pub struct Tables {
    f: Mutex<Option<Arc<DiscTable>>>,
}

fn short_of_f(e: &BorcherdsError) -> bool {
    matches!(e, BorcherdsError::InsufficientFRange { .. })
}

impl Tables {
    pub fn new() -> Self {
        Self::default()
    }

    /// `f(N)` known at least for `N ≤ max`.
    pub fn f(&self, max: i64) -> Result<Arc<DiscTable>, BorcherdsError> {
        let mut slot = self.f.lock().expect("f table lock");
        if let Some(t) = slot.as_ref() {
            if t.max >= max {
                return Ok(t.clone());
            }
        }
        let t = Arc::new(f_table(max.max(16))?);
        *slot = Some(t.clone());
        Ok(t)
    }

    /// Run `g` against a table of at least `start` entries, growing it
    /// while `g` reports an exponent outside the table.
    pub fn with_f<T, E>(&self, start: i64, mut g: impl FnMut(&DiscTable) -> Result<T, E>) -> Result<T, E>
    where
        E: From<BorcherdsError> + AsShort,
    {
        let mut want = start;
        loop {
            let f = self.f(want)?;
            match g(&f) {
                Err(e) if e.short_of_f() && want < 8000 => {
                    want = (f.max * 3 / 2).max(want + 64);
                }
                r => return r,
            }
        }
    }
}

/// Errors that can say "the f table was too short".
pub trait AsShort {
    fn short_of_f(&self) -> bool;
}

impl AsShort for BorcherdsError {
    fn short_of_f(&self) -> bool {
        short_of_f(self)
    }
}

impl AsShort for HeckeError {
    fn short_of_f(&self) -> bool {
        matches!(self, HeckeError::Borcherds(e) if short_of_f(e))
    }
}

/// Box reaching `order` quarter units past the lead of `weyl`.
pub fn relative(weyl: &FourierSeries3, order: i64) -> TruncRegion {
    TruncRegion::new(weyl.min_n4().unwrap_or(0) + order, weyl.min_m4().unwrap_or(0) + order)
}

/// `f` range a product with Weyl factor `weyl` needs on `region`; Δ₅ reads
/// `f(N)`, the weight 35 and 30 products read `f(4N)`.
pub fn f_guess(weyl: &FourierSeries3, region: TruncRegion) -> i64 {
    let k = max_key(weyl, region);
    if *weyl == delta5_weyl() {
        k + 8
    } else {
        4 * k + 8
    }
}

fn mismatch_json(m: &Mismatch) -> Value {
    json!({ "at": m.at.to_string(), "left": m.left.to_string(), "right": m.right.to_string() })
}

fn equal_check(name: &str, a: &FourierSeries3, b: &FourierSeries3, region: &TruncRegion) -> Check {
    let r = region.intersect(&a.region()).intersect(&b.region());
    match series_equal(a, b, &r) {
        Ok(None) => Check::pass(name, Some(json!({ "terms": a.truncate(r).len(), "region": [r.nmax4, r.mmax4] }))),
        Ok(Some(m)) => Check::fail(name, mismatch_json(&m)),
        Err(e) => Check::error(name, e),
    }
}

// ---------------------------------------------------------------- products

/// Theta product, Maass divisor sum and Borcherds product of Δ₅ on `region`.
pub fn delta5_three_way(t: &Tables, region: TruncRegion) -> Vec<Check> {
    let theta = match delta5_theta(region) {
        Ok(s) => s,
        Err(e) => return vec![Check::error("delta5 three-way", e)],
    };
    let maass = maass_lift_delta5(region);
    let product = t.with_f(f_guess(&delta5_weyl(), region), |f| build_delta5(f, region));
    let mut out = vec![equal_check("delta5 theta = maass", &theta, &maass, &region)];
    match product {
        Ok(p) => out.push(equal_check("delta5 theta = product", &theta, &p, &region)),
        Err(e) => out.push(Check::error("delta5 theta = product", e)),
    }
    out
}

/// Exponents read off the theta-built Δ₅.
pub fn f_spot_values(t: &Tables) -> Check {
    let name = "f spot values";
    let f = match t.f(16) {
        Ok(f) => f,
        Err(e) => return Check::error(name, e),
    };
    let want = [(-1, 1), (0, 10), (3, -64), (4, 108)];
    let mut got = BTreeMap::new();
    let mut ok = true;
    for (n, v) in want {
        let x = f.at(n);
        ok &= x == BigInt::from(v);
        got.insert(n.to_string(), x.to_string());
    }
    let below: Vec<i64> = (-12..-1).filter(|n| !f.at(*n).is_zero()).collect();
    ok &= below.is_empty() && f.floor == -1;
    Check::from_bool(name, ok, json!({ "values": got, "nonzero_below_-1": below }))
}

/// `χ₇₅ = c·Δ₃₅·Δ₅⁸` on the box `order` past χ₇₅'s lead, with Δ₃₅'s
/// leading block and the measured `c`.
pub fn chi75_cross(t: &Tables, order: i64) -> Vec<Check> {
    let lead35 = delta35_weyl();
    let r35 = relative(&lead35, order);
    // Δ₅⁸ starts at (16, 16) quarter units
    let region = TruncRegion::new(r35.nmax4 + 16, r35.mmax4 + 16);
    let d35 = match t.with_f(f_guess(&lead35, r35), |f| build_delta35(f, r35)) {
        Ok(s) => s,
        Err(e) => return vec![Check::error("chi75 = c * delta35 * delta5^8", e)],
    };
    let weyl_block = FourierSeries3::poly(&[(ExpTriple::from_q(3, 1, 2), 1), (ExpTriple::from_q(2, 1, 3), -1)]);
    let lead_ok = lead35 == weyl_block
        && d35.coeff(&ExpTriple::from_q(3, 1, 2)) == GaussInt::one()
        && d35.coeff(&ExpTriple::from_q(2, 1, 3)) == GaussInt::from(-1);
    let mut out = vec![Check::from_bool(
        "delta35 leading block q^3 r s^2 - q^2 r s^3",
        lead_ok,
        json!({ "weyl": lead35.iter().map(|(e, c)| format!("{c} @ {e}")).collect::<Vec<_>>(), "lowest_degree_terms": d35.iter().filter(|(e, _)| e.n4 + e.m4 == 20).map(|(e, c)| format!("{c} @ {e}")).collect::<Vec<_>>() }),
    )];
    let d5_region = TruncRegion::new(region.nmax4 - 14, region.mmax4 - 14);
    let rhs = match t.with_f(f_guess(&delta5_weyl(), d5_region), |f| build_delta5(f, d5_region)) {
        Ok(d5) => d35.mul(&d5.pow(8)),
        Err(e) => {
            out.push(Check::error("chi75 = c * delta35 * delta5^8", e));
            return out;
        }
    };
    let chi = match chi75(region) {
        Ok(c) => c,
        Err(e) => {
            out.push(Check::error("chi75 = c * delta35 * delta5^8", e));
            return out;
        }
    };
    out.push(proportional_check("chi75 = c * delta35 * delta5^8", &chi, &rhs, &region));
    out
}

/// One scalar `c` with `a = c·b` on `region`; the witness carries `c`, and
/// `|c|` against the unit modulus of `2^{110}e^{πi/4}·2^{−110}`.
fn proportional_check(name: &str, a: &FourierSeries3, b: &FourierSeries3, region: &TruncRegion) -> Check {
    let Some((num, den)) = leading_ratio(a, b) else {
        return Check::fail(name, json!({ "error": "no common nonzero coefficient" }));
    };
    let r = region.intersect(&a.region()).intersect(&b.region());
    let c = format!("({num})/{den}");
    let abs2 = Ratio::new(num.norm(), &den * &den);
    let w = json!({
        "c": c,
        "abs_c_squared": abs2.to_string(),
        "abs_c_matches_2^-110_scaling": abs2.is_one(),
        "terms": a.truncate(r).len(),
        "region": [r.nmax4, r.mmax4],
    });
    match proportional_on(a, b, &num, &GaussInt::from(den), &r) {
        Ok(None) if !a.truncate(r).is_empty() => Check::pass(name, Some(w)),
        Ok(None) => Check::fail(name, json!({ "error": "nothing to compare", "region": [r.nmax4, r.mmax4] })),
        Ok(Some(m)) => {
            let mut w = w;
            w["mismatch"] = mismatch_json(&m);
            Check::fail(name, w)
        }
        Err(e) => Check::error(name, e),
    }
}

/// `Δ₃₀·Δ₅ = Δ₃₅` and `Δ̃₃₀·Δ₅(2Z) = Δ₃₅`.
pub fn quotient_identities(t: &Tables, order: i64) -> Vec<Check> {
    let r35 = relative(&delta35_weyl(), order);
    let mut out = Vec::new();
    let d35 = match t.with_f(f_guess(&delta35_weyl(), r35), |f| build_delta35(f, r35)) {
        Ok(s) => s,
        Err(e) => return vec![Check::error("quotient identities", e)],
    };
    let d5 = t.with_f(f_guess(&delta5_weyl(), r35), |f| build_delta5(f, r35));
    let d30 = t.with_f(f_guess(&delta30_weyl(), r35), |f| build_delta30(f, r35));
    match (&d30, &d5) {
        (Ok(a), Ok(b)) => out.push(equal_check("delta30 * delta5 = delta35", &a.mul(b), &d35, &r35)),
        (Err(e), _) | (_, Err(e)) => out.push(Check::error("delta30 * delta5 = delta35", e)),
    }
    let d30t = t.with_f(f_guess(&delta30tilde_weyl(), r35), |f| build_delta30tilde(f, r35));
    let d52 = delta5_doubled(t, r35);
    match (&d30t, &d52) {
        (Ok(a), Ok(b)) => out.push(equal_check("delta30tilde * delta5(2Z) = delta35", &a.mul(b), &d35, &r35)),
        (Err(e), _) => out.push(Check::error("delta30tilde * delta5(2Z) = delta35", e)),
        (_, Err(e)) => out.push(Check::error("delta30tilde * delta5(2Z) = delta35", e)),
    }
    out
}

/// `Δ₅(2Z)` on `region`.
pub fn delta5_doubled(t: &Tables, region: TruncRegion) -> Result<FourierSeries3, HeckeError> {
    let s = VariableSubstitution::scale(2);
    let probe = delta5_theta(TruncRegion::square(8))?;
    let need = required_source(&probe, std::slice::from_ref(&s), region)?;
    let d5 = t.with_f(f_guess(&delta5_weyl(), need), |f| build_delta5(f, need))?;
    Ok(substitute(&d5, &s, region)?)
}

fn jacobi_from_block(s: &FourierSeries3, m4: i64, nmax2: i64) -> Option<JacobiSeries> {
    let mut j = JacobiSeries::zero(nmax2, 0, 0);
    for ((n4, l4), c) in s.s_block(m4) {
        if n4 % 2 != 0 || l4 % 2 != 0 {
            return None;
        }
        j.add_term(n4 / 2, l4 / 2, c.to_real()?);
    }
    Some(j)
}

/// First `(n2, l2)` with `n2 ≤ nmax2` where `a` and `b` differ.
fn jacobi_diff(a: &JacobiSeries, b: &JacobiSeries, nmax2: i64) -> Option<Value> {
    let keys: std::collections::BTreeSet<(i64, i64)> =
        a.iter().chain(b.iter()).map(|(k, _)| *k).filter(|(n, _)| *n <= nmax2).collect();
    for (n, l) in keys {
        let (x, y) = (a.coeff2(n, l), b.coeff2(n, l));
        if x != y {
            return Some(json!({ "q": format!("{}/2", n), "r": format!("{}/2", l), "left": x.to_string(), "right": y.to_string() }));
        }
    }
    None
}

fn one_plus(nmax2: i64, n2: i64, l2: i64) -> JacobiSeries {
    let mut s = JacobiSeries::one(nmax2);
    s.add_term(n2, l2, &BigInt::one());
    s
}

fn jacobi_check(name: &str, a: &JacobiSeries, b: &JacobiSeries, nmax2: i64) -> Check {
    match jacobi_diff(a, b, nmax2) {
        None => Check::pass(name, Some(json!({ "terms": a.iter().filter(|((n, _), _)| *n <= nmax2).count() }))),
        Some(w) => Check::fail(name, w),
    }
}

/// Leading Fourier–Jacobi blocks: Δ₃₅ at `s²` against `η⁶⁹ϑ₁₁(τ, 2z)`
/// and the closed product `−q²r⁻¹∏…`; Δ₃₀ at `s^{3/2}` against the
/// closed product `q^{3/2}r^{−1/2}∏…` and, cross-multiplied by
/// `ϑ₁₁(τ, z)`, against `η⁶⁰ϑ₁₁(τ, 2z)`. Compared through `q^{qorder}`
/// past each block's lead.
pub fn fj_blocks(t: &Tables, qorder: i64) -> Vec<Check> {
    let mut out = Vec::new();
    // Δ₃₅: lead q³ at s²
    let n35 = 2 * (3 + qorder);
    let r35 = TruncRegion::new(2 * n35, 8);
    match t.with_f(f_guess(&delta35_weyl(), r35), |f| build_delta35(f, r35)) {
        Ok(d35) => {
            let block = jacobi_from_block(&d35, 8, n35).expect("integral real block");
            let o = qorder + 4;
            let eta_form = theta11_hat(2, o).mul(&JacobiSeries::from_q(&eta_hat(69, o))).shift(6, 0);
            out.push(jacobi_check("delta35 s^2 block = eta^69 theta11(z1, 2z2)", &block, &eta_form, n35));
            let mut closed = JacobiSeries::from_q(&eta_hat(70, o));
            for n in 1..=o {
                closed.mul_one_minus(2 * (n - 1), 4);
                closed.mul_one_minus(2 * n, -4);
            }
            let closed = closed.shift(4, -2).scale(&BigInt::from(-1));
            let mut c = jacobi_check("delta35 s^2 block = closed product -q^2 r^-1 prod(...)", &block, &closed, n35);
            if let Some(w) = c.witness.as_mut() {
                w["agrees_after_times_q"] = json!(jacobi_diff(&block, &closed.shift(2, 0), n35).is_none());
            }
            out.push(c);
        }
        Err(e) => out.push(Check::error("delta35 s^2 block", e)),
    }
    // Δ₃₀: lead q^{5/2} at s^{3/2}
    let n30 = 5 + 2 * qorder;
    let r30 = TruncRegion::new(2 * n30, 6);
    match t.with_f(f_guess(&delta30_weyl(), r30), |f| build_delta30(f, r30)) {
        Ok(d30) => {
            let block = jacobi_from_block(&d30, 6, n30).expect("integral real block");
            let o = qorder + 4;
            let mut closed = JacobiSeries::from_q(&eta_hat(60, o));
            for n in 1..=o {
                closed = closed.mul(&one_plus(2 * o, 2 * (n - 1), 2));
                closed.mul_one_minus(2 * (2 * n - 1), 4);
                closed.mul_one_minus(2 * (2 * n - 1), -4);
                closed = closed.mul(&one_plus(2 * o, 2 * n, -2));
            }
            let closed = closed.shift(3, -1);
            let mut c = jacobi_check("delta30 s^3/2 block = closed phi30,3/2 product", &block, &closed, n30);
            if let Some(w) = c.witness.as_mut() {
                w["agrees_after_times_q"] = json!(jacobi_diff(&block, &closed.shift(2, 0), n30).is_none());
            }
            out.push(c);
            // block · ϑ₁₁(τ, z) = η⁶⁰ ϑ₁₁(τ, 2z), both sides without q^{1/8}
            let lhs = block.mul(&theta11_hat(1, o));
            let rhs = theta11_hat(2, o).mul(&JacobiSeries::from_q(&eta_hat(60, o))).shift(5, 0);
            out.push(jacobi_check(
                "delta30 s^3/2 block * theta11(z1, z2) = eta^60 theta11(z1, 2z2)",
                &lhs,
                &rhs,
                n30.min(lhs.nmax2()),
            ));
        }
        Err(e) => out.push(Check::error("delta30 s^3/2 block", e)),
    }
    out
}

/// φ⁽⁵⁾ leading rows, F⁽⁵⁾ product against exponential lift, and the
/// `z₁ ↔ z₃` symmetry of the product.
/// φ₅ (consistent reading) long enough for `F₅` on `region`, and the
/// product/lift pair built from it.
#[allow(clippy::type_complexity)]
pub fn f5_pair(
    t: &Tables,
    region: TruncRegion,
) -> Result<(JacobiSeries, Result<(FourierSeries3, FourierSeries3), BorcherdsError>), BorcherdsError> {
    let mut qorder = region.nmax4.max(region.mmax4) / 4 + 2;
    // the product reports how far the g table has to reach
    loop {
        let phi5 = t.with_f(16 * qorder + 16, |f| build_phi5_weak(f, qorder, Phi5Reading::Consistent))?;
        match build_f5(&phi5, region) {
            Err(BorcherdsError::InsufficientFRange { need, .. }) if need >= qorder && qorder < 400 => qorder = need + 2,
            r => return Ok((phi5, r)),
        }
    }
}

pub fn f5_checks(t: &Tables, order: i64) -> Vec<Check> {
    let region = TruncRegion::new(order, order);
    let (phi5, built) = match f5_pair(t, region) {
        Ok(x) => x,
        Err(e) => return vec![Check::error("phi5 leading rows", e)],
    };
    let row = |n2: i64| -> BTreeMap<String, String> {
        phi5.row(n2).into_iter().map(|(l, c)| (format!("{l}/2"), c.to_string())).collect()
    };
    let want_m1: BTreeMap<String, String> = [("-2/2".to_string(), "1".to_string()), ("2/2".to_string(), "1".to_string())].into();
    let want_0: BTreeMap<String, String> = [("0/2".to_string(), "48".to_string())].into();
    let below_ok = (phi5.valuation2() == Some(-2)) && phi5.row(-1).is_empty();
    let mut out = vec![Check::from_bool(
        "phi5 leading rows q^-1 (r^-1 + r) + 48",
        row(-2) == want_m1 && row(-1).is_empty() && row(0) == want_0 && below_ok,
        json!({ "q^-1": row(-2), "q^0": row(0) }),
    )];
    match built {
        Ok((product, lift)) => {
            out.push(equal_check("F5 product = exponential lift", &product, &lift, &region));
            out.push(equal_check("F5 coefficient(n,l,m) = coefficient(m,l,n)", &product, &product.swap_nm(), &region));
        }
        Err(e) => out.push(Check::error("F5 product = exponential lift", e)),
    }
    out
}

// ---------------------------------------------------------------- hecke

/// `[Δ₅]₂` through the coset action equals χ₇₅ with the slash scalar split off.
pub fn hecke_equals_chi75(order: i64) -> Check {
    let name = "[delta5]_2 = chi75";
    let region = relative(&chi75_weyl(), order);
    let run = || -> Result<Check, HeckeError> {
        let subs = crate::hecke::coset_substitutions(2)?;
        let probe = delta5_theta(TruncRegion::square(12))?;
        let need = required_source(&probe, &subs, region)?;
        let d5 = delta5_theta(need)?;
        let h = mult_hecke(&d5, 2, 5, region)?;
        let c = chi75(region)?;
        let mut chk = equal_check(name, &h.series, &c, &region);
        if let Some(w) = chk.witness.as_mut() {
            w["scalar"] = json!(h.scalar.to_string());
        }
        Ok(chk)
    };
    run().unwrap_or_else(|e| Check::error(name, e))
}

/// f₂ and f′₂ spot values and `f₂ = f′₂ + f`.
pub fn f2_checks(t: &Tables) -> Vec<Check> {
    let run = || -> Result<Vec<Check>, BorcherdsError> {
        let f = t.f(400)?;
        let f2 = f2_table(&f)?;
        let fp2 = fprime2_table(&f)?;
        let want = [("f2(-4)", f2.get(-4)?, 1), ("f'2(-4)", fp2.get(-4)?, 1), ("f2(-1)", f2.get(-1)?, 0),
            ("f'2(-1)", fp2.get(-1)?, -1), ("f2(0)", f2.get(0)?, 70), ("f'2(0)", fp2.get(0)?, 60)];
        let ok = want.iter().all(|(_, x, v)| *x == BigInt::from(*v));
        let vals: BTreeMap<&str, String> = want.iter().map(|(k, x, _)| (*k, x.to_string())).collect();
        let spot = Check::from_bool("f2 / f'2 spot values", ok, json!(vals));
        let mut bad = None;
        for n in f2.floor.min(fp2.floor)..=f2.max.min(fp2.max) {
            if f2.get(n)? != fp2.get(n)? + f.get(n)? {
                bad = Some(n);
                break;
            }
        }
        let rel = match bad {
            None => Check::pass("f2 = f'2 + f", Some(json!({ "range": [f2.floor.min(fp2.floor), f2.max.min(fp2.max)] }))),
            Some(n) => Check::fail("f2 = f'2 + f", json!({ "N": n })),
        };
        Ok(vec![spot, rel])
    };
    run().unwrap_or_else(|e| vec![Check::error("f2 / f'2", e)])
}

/// Exponents of `[Δ₅]₂ = χ₇₅`, recovered from the coset product. Their
/// excess over `8f` is the closed-form `f₂` (the product for Δ₃₅); their
/// excess over `9f` is `8(φ₀,₁|T^J(2)) − 3φ₀,₁ = f′₂`. The witness also
/// records where the raw exponents first differ from that Jacobi form.
pub fn hecke_exponents(t: &Tables, order: i64) -> Vec<Check> {
    let region = relative(&chi75_weyl(), order);
    let run = || -> Result<Vec<Check>, HeckeError> {
        let c = chi75_normalized(region)?;
        let rec = recover_blocks(&c, &chi75_weyl(), RangeRule::PositiveCone)?.to_disc()?;
        // T₀(2) reads c(4N), so φ₀,₁ runs to q^{4·max}
        let f = t.f(16 * rec.max + 64)?;
        let f2 = f2_table(&f)?;
        let phi = phi01(&f, 4 * rec.max + 8)?;
        let tj = disc_coeffs(&jacobi_t0(&phi, 2, 0, T0Variant::Character)?)?;
        let (mut via_f2, mut via_t0, mut literal) = (None, None, None);
        let mut compared = 0;
        for n in rec.floor..=rec.max {
            // only N ≡ 0, 3 mod 4 occur as 4nm − l²
            if matches!(n.rem_euclid(4), 1 | 2) {
                continue;
            }
            compared += 1;
            let e = rec.get(n)?;
            let fn_ = f.get(n)?;
            let jac = tj.get(n)? - BigInt::from(3) * &fn_;
            if via_f2.is_none() && &e - BigInt::from(8) * &fn_ != f2.get(n)? {
                via_f2 = Some(json!({ "N": n, "recovered": e.to_string(), "f2": f2.get(n)?.to_string() }));
            }
            if via_t0.is_none() && &e - BigInt::from(9) * &fn_ != jac {
                via_t0 = Some(json!({ "N": n, "recovered_minus_9f": (&e - BigInt::from(9) * &fn_).to_string(), "jacobi": jac.to_string() }));
            }
            if literal.is_none() && e != jac {
                literal = Some(json!({ "N": n, "recovered": e.to_string(), "jacobi": jac.to_string() }));
            }
        }
        let range = json!([rec.floor, rec.max]);
        let enough = compared >= 2;
        let by_f2 = match via_f2 {
            None if enough => Check::pass("[delta5]_2 exponents - 8f = f2", Some(json!({ "range": range }))),
            None => Check::fail("[delta5]_2 exponents - 8f = f2", json!({ "error": "range too short", "range": range })),
            Some(w) => Check::fail("[delta5]_2 exponents - 8f = f2", w),
        };
        let j = match via_t0 {
            None if enough => Check::pass(
                "f'2 = 8 phi01|T^J(2) - 3 phi01",
                Some(json!({ "range": range, "raw_exponents_vs_jacobi_first_difference": literal })),
            ),
            None => Check::fail("f'2 = 8 phi01|T^J(2) - 3 phi01", json!({ "error": "range too short", "range": range })),
            Some(w) => Check::fail("f'2 = 8 phi01|T^J(2) - 3 phi01", w),
        };
        Ok(vec![by_f2, j])
    };
    run().unwrap_or_else(|e| vec![Check::error("[delta5]_2 exponents", e)])
}

/// The assembled `∏(1 − e(N))^{f̃_p(N)}` against χ₇₅ (`p = 2`), with the `U`
/// set read from the coset list; the witness notes where the set starting
/// at `diag(p, 1)` breaks down.
pub fn assembly_p2(t: &Tables, order: i64) -> Check {
    let name = "assembled exponent product (p = 2) = chi75";
    let region = relative(&chi75_weyl(), order);
    let run = || -> Result<Check, HeckeError> {
        let a = t.with_f(256, |f| build_assembled(f, 2, USet::Cosets, region))?;
        let c = chi75(region)?;
        let mut chk = proportional_check(name, &c, &a, &region);
        let closed = t.with_f(256, |f| build_assembled(f, 2, USet::DiagP1, region));
        let note = match closed {
            Ok(b) => match leading_ratio(&c, &b) {
                Some((num, den)) => match proportional_on(&c, &b, &num, &GaussInt::from(den), &region) {
                    Ok(Some(m)) => mismatch_json(&m),
                    Ok(None) => json!("proportional"),
                    Err(e) => json!(e.to_string()),
                },
                None => json!("no common coefficient"),
            },
            Err(e) => json!(e.to_string()),
        };
        if let Some(w) = chk.witness.as_mut() {
            w["u_set_diag_p1"] = note;
        }
        Ok(chk)
    };
    run().unwrap_or_else(|e| Check::error(name, e))
}

pub fn lift_commutation(order: i64) -> Check {
    let name = "additive T(2) commutes with the Maass lift of phi12,1";
    match verify_lift_commutation(2, TruncRegion::new(order, order)) {
        Ok(r) => match r.mismatch {
            None if r.terms_compared > 0 => Check::pass(name, Some(json!({ "terms": r.terms_compared }))),
            None => Check::fail(name, json!({ "error": "nothing compared" })),
            Some(m) => Check::fail(name, mismatch_json(&m)),
        },
        Err(e) => Check::error(name, e),
    }
}

pub fn humbert_checks() -> Vec<Check> {
    [(2, (9, 1)), (3, (16, 1))]
        .into_iter()
        .map(|(p, want)| {
            let got = humbert_count(p);
            Check::from_bool(format!("humbert count p = {p}"), got == want, json!({ "alpha": got.0, "beta": got.1 }))
        })
        .collect()
}

/// `[Δ₅]₃` from the assembly formula against `F₃·Δ₅¹⁶`, `F₃` on the
/// convergent part of its range with the `f(N/p²)` term. The witness
/// records what the other readings give.
pub fn p3_stretch(t: &Tables, region: TruncRegion) -> Check {
    let name = "[delta5]_3 = F3 * delta5^16";
    let run = || -> Result<Check, HeckeError> {
        let a = t.with_f(600, |f| build_assembled(f, 3, USet::Cosets, region))?;
        // Δ₅¹⁶ starts at (32, 32)
        let r3 = TruncRegion::new(region.nmax4 - 32, region.mmax4 - 32);
        let d5 = t.with_f(f_guess(&delta5_weyl(), region), |f| build_delta5(f, region))?;
        let d5_16 = d5.pow(16);
        let f3 = t.with_f(600, |f| build_fp(f, 3, r3))?;
        let mut chk = proportional_check(name, &a, &f3.mul(&d5_16), &region);
        let f = t.f(600)?;
        let literal = eval_product(&fp_spec(&f, 3, FpVariant::Hecke, RangeRule::MGeZero)?, r3);
        let closed = eval_product(&fp_spec(&f, 3, FpVariant::LastNOverP, RangeRule::MGeZeroConvergent)?, r3).map(|p| {
            let rhs = p.mul(&d5_16);
            match leading_ratio(&a, &rhs).map(|(n, d)| proportional_on(&a, &rhs, &n, &GaussInt::from(d), &region)) {
                Some(Ok(Some(m))) => mismatch_json(&m),
                Some(Ok(None)) => json!("proportional"),
                Some(Err(e)) => json!(e.to_string()),
                None => json!("no common coefficient"),
            }
        });
        if let Some(w) = chk.witness.as_mut() {
            w["full_range_m>=0"] = json!(literal.err().map(|e| e.to_string()));
            w["last_term_f(N/p)"] = match closed {
                Ok(v) => v,
                Err(e) => json!(e.to_string()),
            };
        }
        Ok(chk)
    };
    run().unwrap_or_else(|e| Check::error(name, e))
}

// ---------------------------------------------------------------- denominator

/// The three denominator functions with their lattice tags.
pub fn km_forms(t: &Tables, region: TruncRegion) -> Result<Vec<(&'static str, FourierSeries3, Tag)>, HeckeError> {
    let d35 = t.with_f(f_guess(&delta35_weyl(), region), |f| build_delta35(f, region))?;
    let d30t = t.with_f(f_guess(&delta30tilde_weyl(), region), |f| build_delta30tilde(f, region))?;
    let d52 = delta5_doubled(t, region)?;
    Ok(vec![("delta35", d35, Tag::M10), ("delta30tilde", d30t, Tag::M1I), ("delta5(2Z)", d52, Tag::M1II)])
}

pub fn denominator_checks(t: &Tables, region: TruncRegion) -> Vec<Check> {
    let forms = match km_forms(t, region) {
        Ok(f) => f,
        Err(e) => return vec![Check::error("denominator functions", e)],
    };
    let mut out = Vec::new();
    for (name, s, tag) in &forms {
        let cname = format!("{name} anti-invariant under {} reflections", tag.name());
        match antiinvariance_check(s, *tag, Convention::TwoPi) {
            Ok(a) => out.push(match a.violations.first() {
                None if a.pairs_checked > 0 => Check::pass(cname, Some(json!({ "pairs": a.pairs_checked }))),
                None => Check::fail(cname, json!({ "error": "no pairs inside the region" })),
                Some(v) => Check::fail(cname, json!({ "violation": format!("{v:?}"), "count": a.violations.len() })),
            }),
            Err(e) => out.push(Check::error(cname, e)),
        }
        let dname = format!("{name} denominator structure ({})", tag.name());
        match denominator_structure(s, *tag, Convention::TwoPi) {
            Ok(d) => {
                let m0 = d.m0();
                let ok = d.unit_at_rho()
                    && d.all_integral()
                    && m0 == Some(GaussInt::from(-1))
                    && d.off_lattice.is_empty()
                    && d.folding_violations.is_empty();
                let w = json!({
                    "rho": d.rho.to_string(),
                    "coefficient_at_rho": d.rho_coeff.to_string(),
                    "m(0)": m0.map(|c| c.to_string()),
                    "integral": d.all_integral(),
                    "off_lattice": d.off_lattice.iter().take(3).map(|v| v.to_string()).collect::<Vec<_>>(),
                    "folding_violations": d.folding_violations.len(),
                    "outside_box": d.unchecked,
                    "descent_failures": d.descent_failures,
                    "support": d.support_size,
                });
                out.push(Check::from_bool(dname, ok, w));
            }
            Err(e) => out.push(Check::error(dname, e)),
        }
    }
    out
}

/// Multiplicities of one norm in the table of `tag`.
pub fn multiplicity(t: &Tables, tag: Tag, norm: i64, norm_bound: i64) -> Result<Vec<(bool, Option<bool>, BigInt)>, String> {
    let f = t.f(16 * norm_bound.max(4) + 16).map_err(|e| e.to_string())?;
    let f2 = f2_table(&f).map_err(|e| e.to_string())?;
    let rows = mult_table(tag, &f, &f2, norm_bound).map_err(|e| e.to_string())?;
    Ok(rows
        .into_iter()
        .filter(|r| r.norm == Ratio::from_integer(norm))
        .map(|r| (r.real, r.in_m1ii, r.multiplicity))
        .collect())
}

pub fn mult_checks(t: &Tables) -> Vec<Check> {
    let spots = [(Tag::M1II, 2, 1), (Tag::M1II, 0, 10), (Tag::M10, 2, 1), (Tag::M10, 0, 70)];
    spots
        .into_iter()
        .map(|(tag, norm, want)| {
            let name = format!("mult {} (alpha, alpha) = {norm}", tag.name());
            match multiplicity(t, tag, norm, 4) {
                Ok(rows) => {
                    let ok = rows.len() == 1 && rows[0].2 == BigInt::from(want);
                    Check::from_bool(name, ok, json!({ "multiplicities": rows.iter().map(|r| r.2.to_string()).collect::<Vec<_>>() }))
                }
                Err(e) => Check::error(name, e),
            }
        })
        .collect()
}

// ---------------------------------------------------------------- cartan

pub fn cartan_checks() -> Vec<Check> {
    let s = match cartan_suite() {
        Ok(s) => s,
        Err(e) => return vec![Check::error("cartan data", e)],
    };
    let mut out = Vec::new();
    for m in &s.matrices {
        for (what, ok) in m.as_list() {
            out.push(Check::from_bool(format!("{}: {what}", m.name), ok, json!({ "size": m.size })));
        }
    }
    if s.matrices.len() != 12 {
        out.push(Check::fail("twelve matrices", json!({ "found": s.matrices.len() })));
    }
    for (tag, ok) in &s.gram_matches {
        out.push(Check::from_bool(format!("gram of simple roots = {}", tag.name()), *ok, json!(null)));
    }
    for (tag, rho, ok) in &s.rho_checks {
        out.push(Check::from_bool(format!("(rho, delta) = -1 for {}", tag.name()), *ok, json!({ "rho": rho.to_string() })));
    }
    out.push(Check::from_bool(
        format!("{} has signature (2,1)", s.parabolic_name),
        s.parabolic_signature_2_1,
        json!(null),
    ));
    out
}

// ---------------------------------------------------------------- suites

pub fn run_suite(suite: Suite, order: i64, t: &Tables) -> Result<Report, String> {
    if order < suite.min_order() {
        return Err(format!("suite {} needs order >= {}", suite.name(), suite.min_order()));
    }
    let mut checks = Vec::new();
    if matches!(suite, Suite::Products | Suite::All) {
        checks.extend(delta5_three_way(t, TruncRegion::new(order, order)));
        checks.push(f_spot_values(t));
        checks.extend(chi75_cross(t, order));
        checks.extend(quotient_identities(t, order));
        checks.extend(f5_checks(t, order));
    }
    if matches!(suite, Suite::Hecke | Suite::All) {
        checks.push(hecke_equals_chi75(order));
        checks.extend(f2_checks(t));
        checks.extend(hecke_exponents(t, order));
        checks.push(assembly_p2(t, order));
        checks.push(lift_commutation(order));
        checks.extend(humbert_checks());
    }
    if matches!(suite, Suite::Denominator | Suite::All) {
        checks.extend(denominator_checks(t, relative(&delta35_weyl(), order)));
        checks.extend(mult_checks(t));
    }
    if matches!(suite, Suite::Cartan | Suite::All) {
        checks.extend(cartan_checks());
    }
    Ok(Report { suite: suite.name().into(), checks, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_schema() {
        let r = Report {
            suite: "cartan".into(),
            checks: vec![Check::pass("a", None), Check::fail("b", json!({ "at": "(1, 1, 1)/4" }))],
            order: 16,
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["checks"][0], json!({ "name": "a", "status": "pass" }));
        assert_eq!(v["checks"][1]["status"], "fail");
        assert!(!r.passed());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Products, Suite::Hecke, Suite::Denominator, Suite::Cartan, Suite::All] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn below_min_order_refused() {
        assert!(run_suite(Suite::Hecke, 8, &Tables::new()).is_err());
    }

    #[test]
    fn humbert_pass() {
        assert!(humbert_checks().iter().all(Check::passed));
    }

    #[test]
    fn relative_box() {
        let r = relative(&delta35_weyl(), 16);
        assert_eq!((r.nmax4, r.mmax4), (24, 24));
    }
}
