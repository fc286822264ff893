use num_bigint::BigInt;
use num_rational::Ratio;
use proptest::prelude::*;
use siegel_km::borcherds::{
    delta5_weyl, eval_product, max_key, recover_exponents, DiscTable, ExponentTable, IndexRule, ProductSpec, RangeRule,
};
use siegel_km::fourier::*;
use siegel_km::lattice::{bridge, bridge_inverse, pair, reflect, Convention, LatticeVec};
use std::collections::BTreeMap;

const BOX: TruncRegion = TruncRegion::new(16, 16);

fn gauss() -> impl Strategy<Value = GaussInt> {
    (-5i64..=5, -5i64..=5).prop_map(|(a, b)| GaussInt::new(a, b))
}

fn sparse(region: TruncRegion) -> impl Strategy<Value = FourierSeries3> {
    prop::collection::vec((0i64..=12, -12i64..=12, 0i64..=12, gauss()), 0..=50)
        .prop_map(move |ts| FourierSeries3::from_terms(ts.into_iter().map(|(n, l, m, c)| (ExpTriple::new(n, l, m), c)), region))
}

/// Terms inside the cone `4nm ≥ l²`, as substitution sources must be.
fn cone_series(region: TruncRegion) -> impl Strategy<Value = FourierSeries3> {
    prop::collection::vec((0i64..=region.nmax4, 0i64..=region.mmax4, -1.0f64..=1.0, gauss()), 0..=30).prop_map(
        move |ts| {
            let terms = ts.into_iter().map(|(n, m, t, c)| {
                let lmax = ((4 * n * m) as f64).sqrt().floor() as i64;
                (ExpTriple::new(n, (t * lmax as f64).round() as i64, m), c)
            });
            FourierSeries3::from_terms(terms, region)
        },
    )
}

fn same_on(a: &FourierSeries3, b: &FourierSeries3) -> Result<(), TestCaseError> {
    let r = a.region().intersect(&b.region());
    let m = series_equal(a, b, &r).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(m.is_none(), "mismatch {:?}", m);
    Ok(())
}

fn rational() -> impl Strategy<Value = Ratio<i64>> {
    (-20i64..=20, 1i64..=6).prop_map(|(a, b)| Ratio::new(a, b))
}

fn vector() -> impl Strategy<Value = LatticeVec> {
    (rational(), rational(), rational()).prop_map(|(a, b, c)| LatticeVec::new(a, b, c))
}

/// Rational `δ = a f₂ + b f₋₂ + c f₃` of square `2c² − 2ab = 2`.
fn root() -> impl Strategy<Value = LatticeVec> {
    (rational(), rational()).prop_filter_map("a = 0", |(a, c)| {
        (a != Ratio::from_integer(0)).then(|| LatticeVec::new(a, (c * c - 1) / a, c))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mul_commutes(a in sparse(BOX), b in sparse(BOX)) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
    }

    #[test]
    fn mul_associates(a in sparse(BOX), b in sparse(BOX), c in sparse(BOX)) {
        same_on(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c)))?;
    }

    #[test]
    fn mul_distributes(a in sparse(BOX), b in sparse(BOX), c in sparse(BOX)) {
        same_on(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c)))?;
    }

    #[test]
    fn substitution_is_multiplicative(a in cone_series(BOX), b in cone_series(BOX), k in 1i64..=3) {
        let s = VariableSubstitution::scale(k);
        let target = TruncRegion::new(16, 16);
        let lhs = substitute(&a.mul(&b), &s, target).unwrap();
        let rhs = substitute(&a, &s, target).unwrap().mul(&substitute(&b, &s, target).unwrap());
        same_on(&lhs, &rhs)?;
    }

    #[test]
    fn interchange_round_trip(a in sparse(BOX)) {
        let text = to_interchange("x", &a);
        let (name, back) = from_interchange(&text).unwrap();
        prop_assert_eq!(name, "x");
        prop_assert_eq!(&back, &a);
        prop_assert_eq!(to_interchange("x", &back), text);
    }

    #[test]
    fn mul_independent_of_thread_count(a in sparse(BOX), b in sparse(BOX)) {
        let with = |n: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| to_interchange("ab", &a.mul(&b)))
        };
        let one = with(1);
        prop_assert_eq!(&one, &with(3));
        prop_assert_eq!(&one, &with(8));
    }

    #[test]
    fn reflections_preserve_pairing(x in vector(), y in vector(), d in root()) {
        let sx = reflect(&x, &d).unwrap();
        let sy = reflect(&y, &d).unwrap();
        prop_assert_eq!(pair(&sx, &sy), pair(&x, &y));
        prop_assert_eq!(reflect(&sx, &d).unwrap(), x);
    }

    #[test]
    fn bridge_inverts(n in -40i64..=40, l in -40i64..=40, m in -40i64..=40) {
        let e = ExpTriple::new(n, l, m);
        for conv in [Convention::Pi, Convention::TwoPi] {
            prop_assert_eq!(bridge_inverse(&bridge(&e, conv), conv), Some(e));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A random exponent table survives a product expansion and recovery.
    #[test]
    fn recover_after_eval(fm1 in 0i64..=2, rest in prop::collection::vec(-4i64..=4, 64)) {
        let region = TruncRegion::new(14, 14);
        let weyl = delta5_weyl();
        let top = max_key(&weyl, region);
        let mut entries = BTreeMap::new();
        entries.insert(-1, BigInt::from(fm1));
        // only N ≡ 0, 3 mod 4 occur as 4nm − l²
        for (k, v) in (0..=top).filter(|k| k % 4 == 0 || k % 4 == 3).zip(rest.iter().cycle()) {
            entries.insert(k, BigInt::from(*v));
        }
        let f = DiscTable::new(entries, -1, top);
        let spec = ProductSpec {
            weyl: weyl.clone(),
            table: ExponentTable::Discriminant(f.clone()),
            index_rule: IndexRule::Discriminant,
            range_rule: RangeRule::PositiveCone,
        };
        let s = eval_product(&spec, region).unwrap();
        let ExponentTable::Discriminant(got) =
            recover_exponents(&s, &weyl, RangeRule::PositiveCone, IndexRule::Discriminant).unwrap()
        else {
            return Err(TestCaseError::fail("expected a discriminant table"));
        };
        prop_assert!(got.max >= 0);
        for n in -8..=got.max {
            prop_assert_eq!(got.at(n), f.at(n), "key {}", n);
        }
    }
}
