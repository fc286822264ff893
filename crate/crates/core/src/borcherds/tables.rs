use super::BorcherdsError;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde_json::{Map, Value};
use std::collections::BTreeMap;

/// `N ↦ f(N)`: zero below `floor`, known for `N ≤ max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscTable {
    entries: BTreeMap<i64, BigInt>,
    pub floor: i64,
    pub max: i64,
}

impl DiscTable {
    pub fn new(entries: BTreeMap<i64, BigInt>, floor: i64, max: i64) -> Self {
        let entries = entries.into_iter().filter(|(k, v)| !v.is_zero() && *k <= max).collect();
        let t = DiscTable { entries, floor, max };
        assert!(t.entries.keys().all(|k| *k >= floor), "entry below declared floor");
        t
    }

    pub fn empty() -> Self {
        DiscTable { entries: BTreeMap::new(), floor: 0, max: i64::MAX / 4 }
    }

    pub fn get(&self, n: i64) -> Result<BigInt, BorcherdsError> {
        if n < self.floor {
            return Ok(BigInt::zero());
        }
        if n > self.max {
            return Err(BorcherdsError::InsufficientFRange { need: n, have: self.max });
        }
        Ok(self.entries.get(&n).cloned().unwrap_or_default())
    }

    /// Shorthand for spot checks inside the known range.
    pub fn at(&self, n: i64) -> BigInt {
        self.get(n).expect("value inside the computed range")
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &BigInt)> {
        self.entries.iter()
    }

    /// Least key with a nonzero value.
    pub fn support_floor(&self) -> Option<i64> {
        self.entries.keys().next().copied()
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.entries {
            m.insert(k.to_string(), json_int(v));
        }
        Value::Object(m)
    }
}

/// `(n, l) ↦ g(n, l)`: zero for `n < nmin`, known for `n ≤ nmax`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTable {
    entries: BTreeMap<(i64, i64), BigInt>,
    pub nmin: i64,
    pub nmax: i64,
}

impl PairTable {
    pub fn new(entries: BTreeMap<(i64, i64), BigInt>, nmin: i64, nmax: i64) -> Self {
        let entries = entries
            .into_iter()
            .filter(|((n, _), v)| !v.is_zero() && *n <= nmax)
            .collect();
        let t = PairTable { entries, nmin, nmax };
        assert!(t.entries.keys().all(|(n, _)| *n >= nmin), "entry below declared floor");
        t
    }

    pub fn get(&self, n: i64, l: i64) -> Result<BigInt, BorcherdsError> {
        if n < self.nmin {
            return Ok(BigInt::zero());
        }
        if n > self.nmax {
            return Err(BorcherdsError::InsufficientFRange { need: n, have: self.nmax });
        }
        Ok(self.entries.get(&(n, l)).cloned().unwrap_or_default())
    }

    /// Nonzero entries of row `n`.
    pub fn row(&self, n: i64) -> Result<Vec<(i64, BigInt)>, BorcherdsError> {
        if n > self.nmax {
            return Err(BorcherdsError::InsufficientFRange { need: n, have: self.nmax });
        }
        Ok(self
            .entries
            .range((n, i64::MIN)..=(n, i64::MAX))
            .map(|((_, l), v)| (*l, v.clone()))
            .collect())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for ((n, l), v) in &self.entries {
            m.insert(format!("{n},{l}"), json_int(v));
        }
        Value::Object(m)
    }
}

/// Explicit exponents at `(n, l, m)` (powers of `q, r, s`), zero
/// elsewhere; complete for `n ≤ nmax`, `m ≤ mmax`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleTable {
    entries: BTreeMap<(i64, i64, i64), BigInt>,
    pub nmax: i64,
    pub mmax: i64,
}

impl TripleTable {
    pub fn new(entries: BTreeMap<(i64, i64, i64), BigInt>, nmax: i64, mmax: i64) -> Self {
        let entries = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        TripleTable { entries, nmax, mmax }
    }

    pub fn get(&self, n: i64, l: i64, m: i64) -> BigInt {
        self.entries.get(&(n, l, m)).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i64, i64, i64), &BigInt)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for ((a, l, b), v) in &self.entries {
            m.insert(format!("{a},{l},{b}"), json_int(v));
        }
        Value::Object(m)
    }
}

fn json_int(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(x) => Value::from(x),
        None => Value::from(v.to_string()),
    }
}

/// How a factor `(n, l, m)` reads its exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexRule {
    /// `table(4nm − l²)`
    Discriminant,
    /// `table(nm, l)`
    PairNm,
}

/// Exponent source of a product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExponentTable {
    Discriminant(DiscTable),
    Pair(PairTable),
    Triple(TripleTable),
    /// `base(N) − [n, l, m all even]·sub(N/4)` with `N = 4nm − l²`.
    Masked { base: DiscTable, sub: DiscTable },
}

impl ExponentTable {
    pub fn exponent(&self, rule: IndexRule, n: i64, l: i64, m: i64) -> Result<BigInt, BorcherdsError> {
        let disc = 4 * n * m - l * l;
        match (self, rule) {
            (ExponentTable::Triple(t), _) => Ok(t.get(n, l, m)),
            (ExponentTable::Discriminant(t), IndexRule::Discriminant) => t.get(disc),
            (ExponentTable::Pair(t), IndexRule::PairNm) => t.get(n * m, l),
            (ExponentTable::Masked { base, sub }, IndexRule::Discriminant) => {
                let mut e = base.get(disc)?;
                if n.is_even() && l.is_even() && m.is_even() {
                    e -= sub.get(disc / 4)?;
                }
                Ok(e)
            }
            _ => Err(BorcherdsError::NotAProduct("index rule does not match the table kind".into())),
        }
    }

    /// Values of `l` that may carry a nonzero exponent in block `(n, m)`.
    pub fn l_candidates(&self, rule: IndexRule, n: i64, m: i64) -> Result<Vec<i64>, BorcherdsError> {
        let by_floor = |floor: i64| {
            let top = 4 * n * m - floor;
            if top < 0 {
                return Vec::new();
            }
            let r = num_integer::Roots::sqrt(&top);
            (-r..=r).collect()
        };
        match self {
            ExponentTable::Triple(t) => Ok(t
                .entries
                .keys()
                .filter(|(a, _, b)| *a == n && *b == m)
                .map(|(_, l, _)| *l)
                .collect()),
            ExponentTable::Discriminant(t) => Ok(by_floor(t.floor)),
            ExponentTable::Masked { base, sub } => Ok(by_floor(base.floor.min(4 * sub.floor))),
            ExponentTable::Pair(t) => match rule {
                IndexRule::PairNm => Ok(t.row(n * m)?.into_iter().map(|(l, _)| l).collect()),
                IndexRule::Discriminant => {
                    Err(BorcherdsError::NotAProduct("pair table needs the (nm, l) rule".into()))
                }
            },
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ExponentTable::Discriminant(t) => t.to_json(),
            ExponentTable::Pair(t) => t.to_json(),
            ExponentTable::Triple(t) => t.to_json(),
            ExponentTable::Masked { base, sub } => {
                serde_json::json!({"base": base.to_json(), "sub": sub.to_json()})
            }
        }
    }
}
