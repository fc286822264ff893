use super::{ExpTriple, FourierError, FourierSeries3, GaussInt, TruncRegion};
use num_rational::Ratio;
use std::collections::BTreeMap;

/// Affine change of variables `z ↦ L z + t` with entries in `¼ℤ`, stored
/// as 4× integers. Row `i` of `L` gives the new `z_i` in terms of the old
/// coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableSubstitution {
    lq: [[i64; 3]; 3],
    tq: [i64; 3],
}

impl VariableSubstitution {
    /// From quarter-unit integers: `L = lq/4`, `t = tq/4`.
    pub const fn from_quarters(lq: [[i64; 3]; 3], tq: [i64; 3]) -> Self {
        VariableSubstitution { lq, tq }
    }

    /// From rationals; every denominator must divide 4.
    pub fn new(l: [[Ratio<i64>; 3]; 3], t: [Ratio<i64>; 3]) -> Result<Self, FourierError> {
        let quarter = |x: Ratio<i64>| -> Result<i64, FourierError> {
            let y = x * 4;
            if y.is_integer() {
                Ok(y.to_integer())
            } else {
                Err(FourierError::InadmissibleSubstitution {
                    at: None,
                    reason: format!("entry {x} has denominator not dividing 4"),
                })
            }
        };
        let mut lq = [[0; 3]; 3];
        let mut tq = [0; 3];
        for i in 0..3 {
            for j in 0..3 {
                lq[i][j] = quarter(l[i][j])?;
            }
            tq[i] = quarter(t[i])?;
        }
        Ok(VariableSubstitution { lq, tq })
    }

    /// `z ↦ k z`.
    pub const fn scale(k: i64) -> Self {
        let d = 4 * k;
        VariableSubstitution { lq: [[d, 0, 0], [0, d, 0], [0, 0, d]], tq: [0, 0, 0] }
    }

    pub fn quarters(&self) -> ([[i64; 3]; 3], [i64; 3]) {
        (self.lq, self.tq)
    }

    /// Image exponent and the twist as a power of `i`.
    pub fn apply_exponent(&self, e: &ExpTriple) -> Result<(ExpTriple, i64), FourierError> {
        let src = [e.n4, e.l4, e.m4];
        let mut out = [0i64; 3];
        for (j, o) in out.iter_mut().enumerate() {
            let v: i64 = (0..3).map(|i| src[i] * self.lq[i][j]).sum();
            if v % 4 != 0 {
                return Err(FourierError::InadmissibleSubstitution {
                    at: Some(*e),
                    reason: "image exponent leaves quarter-integer units".into(),
                });
            }
            *o = v / 4;
        }
        let x: i64 = (0..3).map(|i| src[i] * self.tq[i]).sum();
        if x % 4 != 0 {
            return Err(FourierError::InadmissibleSubstitution {
                at: Some(*e),
                reason: "twist is not a power of i".into(),
            });
        }
        Ok((ExpTriple::new(out[0], out[1], out[2]), x / 4))
    }

    /// For maps with `m' = d·m` and `n' = a n + b l + c m`, the smallest
    /// source box whose terms cover `target` for any series supported in
    /// the cone `4nm ≥ l²`, `n, m ≥ 0`. `None` for other shapes.
    pub fn source_region_for(&self, target: &TruncRegion) -> Option<TruncRegion> {
        let lq = &self.lq;
        if lq[0][2] != 0 || lq[1][2] != 0 || lq[2][2] <= 0 || lq[0][0] <= 0 {
            return None;
        }
        let d = lq[2][2] as i128;
        let ms = ((4 * target.mmax4 as i128) / d) as i64;
        let (a, b, c) = (lq[0][0] as i128, lq[1][0] as i128, lq[2][0] as i128);
        let n_target = 4 * target.nmax4 as i128;
        'search: for ns in 0..(1i64 << 20) {
            let n0 = ns as i128 + 1;
            if a * a * n0 < b * b * ms as i128 {
                continue;
            }
            for m in 0..=ms as i128 {
                let lhs = a * n0 + c * m - n_target;
                if lhs <= 0 || lhs * lhs <= 4 * b * b * n0 * m {
                    continue 'search;
                }
            }
            return Some(TruncRegion::new(ns, ms));
        }
        None
    }
}

fn in_cone(e: &ExpTriple) -> bool {
    e.n4 >= 0 && e.m4 >= 0 && 4 * (e.n4 as i128) * (e.m4 as i128) >= (e.l4 as i128).pow(2)
}

/// Apply `s` to every monomial of `a`, keeping images inside `target`.
///
/// Unless `a` is exact, the source box must cover `target` (checked with
/// [`VariableSubstitution::source_region_for`] against a cone-supported
/// source), so that no dropped term could have landed inside `target`.
pub fn substitute(
    a: &FourierSeries3,
    s: &VariableSubstitution,
    target: TruncRegion,
) -> Result<FourierSeries3, FourierError> {
    if !a.region().is_exact() {
        let need = s.source_region_for(&target).ok_or_else(|| FourierError::UncoveredTarget {
            reason: "substitution shape has no coverage rule".into(),
        })?;
        if let Some((e, _)) = a.iter().find(|(e, _)| !in_cone(e)) {
            return Err(FourierError::UncoveredTarget {
                reason: format!("source term {e} outside the positive cone"),
            });
        }
        if !need.within(&a.region()) {
            return Err(FourierError::UncoveredTarget {
                reason: format!(
                    "source box ({}, {}) smaller than required ({}, {})",
                    a.region().nmax4,
                    a.region().mmax4,
                    need.nmax4,
                    need.mmax4
                ),
            });
        }
    }
    let mut out: BTreeMap<ExpTriple, GaussInt> = BTreeMap::new();
    for (e, c) in a.iter() {
        let (img, twist) = s.apply_exponent(e)?;
        if target.contains(&img) {
            *out.entry(img).or_default() += &c.mul_i_pow(twist);
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(FourierSeries3::from_map(out, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_half_power() {
        let x = FourierSeries3::poly(&[(ExpTriple::new(2, 0, 0), 1)]);
        let y = substitute(&x, &VariableSubstitution::scale(2), TruncRegion::exact()).unwrap();
        assert_eq!(y, FourierSeries3::poly(&[(ExpTriple::new(4, 0, 0), 1)]));
    }

    #[test]
    fn integer_shift_on_odd_l() {
        let s = VariableSubstitution::from_quarters([[4, 0, 0], [0, 4, 0], [0, 0, 4]], [0, 4, 0]);
        let x = FourierSeries3::poly(&[(ExpTriple::from_pi(0, 3, 0), 1)]);
        let y = substitute(&x, &s, TruncRegion::exact()).unwrap();
        assert_eq!(y.coeff(&ExpTriple::from_pi(0, 3, 0)), GaussInt::real(-1));
    }

    #[test]
    fn mixed_map_by_hand() {
        // (z1, z2, z3) ↦ (2z1, −z1+z2, (z1 − 2z2 + z3 + 1)/2)
        let s = VariableSubstitution::from_quarters([[8, 0, 0], [-4, 4, 0], [2, -4, 2]], [0, 0, 2]);
        let (img, tw) = s.apply_exponent(&ExpTriple::from_pi(1, 1, 1)).unwrap();
        // exponents ½·2 − ½ + ½·½ = ¾, ½ − ½ = 0, ¼; twist exp(2πi·½·½) = i
        assert_eq!(img, ExpTriple::new(3, 0, 1));
        assert_eq!(tw, 1);
    }

    #[test]
    fn rejects_thirds() {
        let s = VariableSubstitution::new(
            [
                [Ratio::new(1, 3), Ratio::from(0), Ratio::from(0)],
                [Ratio::from(0), Ratio::from(1), Ratio::from(0)],
                [Ratio::from(0), Ratio::from(0), Ratio::from(3)],
            ],
            [Ratio::from(0); 3],
        );
        assert!(matches!(s, Err(FourierError::InadmissibleSubstitution { .. })));
    }

    #[test]
    fn source_box_for_halving() {
        let s = VariableSubstitution::from_quarters([[2, 0, 0], [0, 2, 0], [0, 0, 2]], [0, 0, 0]);
        let r = s.source_region_for(&TruncRegion::square(8)).unwrap();
        assert_eq!((r.nmax4, r.mmax4), (16, 16));
    }
}
