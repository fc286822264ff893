//! Named forms for `siegel-km expand`.
//!
//! Siegel forms are expanded on the box `order` quarter units past their
//! leading monomial. One-variable and Jacobi forms take `order` as a count
//! of integral q-powers: exponents `q^n` with `n < order` (plus the polar
//! part). They are stored as three-variable series: `q^n` as `(4n, 0, 0)`,
//! `qⁿrˡ` of a Jacobi form of index `k` as `(4n, 4l, 4k)`.

use crate::borcherds::{
    build_delta30, build_delta30tilde, build_delta35, build_delta5, build_fp, build_phi5_weak, delta30_weyl,
    delta30tilde_weyl, delta35_weyl, delta5_weyl, f5_weyl, fp_weyl, phi01, Phi5Reading,
};
use crate::fourier::{ExpTriple, FourierSeries3, GaussInt, TruncRegion};
use crate::hecke::{chi75, chi75_weyl, delta35_from_chi75};
use crate::jacobi::JacobiSeries;
use crate::qseries::QSeries;
use crate::report::{f5_pair, f_guess, relative, Tables};
use crate::theta::{delta12, delta5_theta, eisenstein_series, j_invariant, maass_lift_delta5};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Delta5Theta,
    Delta5Maass,
    Delta5Product,
    Chi75,
    Delta35Product,
    Delta35Hecke,
    Delta30Product,
    Delta30TildeProduct,
    F3Product,
    F5Product,
    F5Lift,
    Phi01,
    Phi5Weak,
    J,
    E4,
    E6,
    Delta12,
}

impl Form {
    pub const ALL: [Form; 17] = [
        Form::Delta5Theta,
        Form::Delta5Maass,
        Form::Delta5Product,
        Form::Chi75,
        Form::Delta35Product,
        Form::Delta35Hecke,
        Form::Delta30Product,
        Form::Delta30TildeProduct,
        Form::F3Product,
        Form::F5Product,
        Form::F5Lift,
        Form::Phi01,
        Form::Phi5Weak,
        Form::J,
        Form::E4,
        Form::E6,
        Form::Delta12,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Form::Delta5Theta => "delta5.theta",
            Form::Delta5Maass => "delta5.maass",
            Form::Delta5Product => "delta5.product",
            Form::Chi75 => "chi75",
            Form::Delta35Product => "delta35.product",
            Form::Delta35Hecke => "delta35.hecke",
            Form::Delta30Product => "delta30.product",
            Form::Delta30TildeProduct => "delta30tilde.product",
            Form::F3Product => "Fp.product(p=3)",
            Form::F5Product => "F5.product",
            Form::F5Lift => "F5.lift",
            Form::Phi01 => "phi01",
            Form::Phi5Weak => "phi5weak",
            Form::J => "j",
            Form::E4 => "E4",
            Form::E6 => "E6",
            Form::Delta12 => "Delta12",
        }
    }

    /// Genus-2 forms, as opposed to q-series and Jacobi forms.
    pub fn is_siegel(&self) -> bool {
        !matches!(self, Form::Phi01 | Form::Phi5Weak | Form::J | Form::E4 | Form::E6 | Form::Delta12)
    }

    /// Smallest accepted `order`.
    pub fn min_order(&self) -> i64 {
        if self.is_siegel() {
            4
        } else {
            1
        }
    }

    fn weyl(&self) -> Option<FourierSeries3> {
        Some(match self {
            Form::Delta5Theta | Form::Delta5Maass | Form::Delta5Product => delta5_weyl(),
            Form::Chi75 => chi75_weyl(),
            Form::Delta35Product | Form::Delta35Hecke => delta35_weyl(),
            Form::Delta30Product => delta30_weyl(),
            Form::Delta30TildeProduct => delta30tilde_weyl(),
            Form::F3Product => fp_weyl(3).ok()?,
            Form::F5Product | Form::F5Lift => f5_weyl(),
            _ => return None,
        })
    }

    fn jacobi_index4(&self) -> i64 {
        match self {
            Form::Phi01 | Form::Phi5Weak => 4,
            _ => 0,
        }
    }

    /// Box of the expansion written for `order`.
    pub fn region(&self, order: i64) -> TruncRegion {
        match self.weyl() {
            Some(w) => relative(&w, order),
            None => TruncRegion::new(4 * (order - 1), self.jacobi_index4()),
        }
    }

    /// Expansion on exactly [`Form::region`].
    pub fn expand(&self, t: &Tables, order: i64) -> Result<FourierSeries3, String> {
        if order < self.min_order() {
            return Err(format!("{} needs order >= {}", self.name(), self.min_order()));
        }
        let region = self.region(order);
        let e = |x: &dyn fmt::Display| x.to_string();
        let guess = |w: FourierSeries3| f_guess(&w, region);
        let qmax = order - 1;
        let s = match self {
            Form::Delta5Theta => delta5_theta(region).map_err(|x| e(&x))?,
            Form::Delta5Maass => maass_lift_delta5(region),
            Form::Delta5Product => t.with_f(guess(delta5_weyl()), |f| build_delta5(f, region)).map_err(|x| e(&x))?,
            Form::Chi75 => chi75(region).map_err(|x| e(&x))?,
            Form::Delta35Product => t.with_f(guess(delta35_weyl()), |f| build_delta35(f, region)).map_err(|x| e(&x))?,
            Form::Delta35Hecke => delta35_from_chi75(region).map_err(|x| e(&x))?,
            Form::Delta30Product => t.with_f(guess(delta30_weyl()), |f| build_delta30(f, region)).map_err(|x| e(&x))?,
            Form::Delta30TildeProduct => {
                t.with_f(guess(delta30tilde_weyl()), |f| build_delta30tilde(f, region)).map_err(|x| e(&x))?
            }
            Form::F3Product => {
                let w = fp_weyl(3).map_err(|x| e(&x))?;
                t.with_f(guess(w), |f| build_fp(f, 3, region)).map_err(|x| e(&x))?
            }
            Form::F5Product | Form::F5Lift => {
                let (_, built) = f5_pair(t, region).map_err(|x| e(&x))?;
                let (product, lift) = built.map_err(|x| e(&x))?;
                if *self == Form::F5Product {
                    product
                } else {
                    lift
                }
            }
            Form::Phi01 => jacobi_to_series(&t.with_f(4 * qmax + 8, |f| phi01(f, qmax)).map_err(|x| e(&x))?, region),
            Form::Phi5Weak => jacobi_to_series(
                &t.with_f(16 * qmax + 64, |f| build_phi5_weak(f, qmax.max(1), Phi5Reading::Consistent))
                    .map_err(|x| e(&x))?,
                region,
            ),
            Form::J => q_to_series(&j_invariant(qmax), region),
            Form::E4 => q_to_series(&eisenstein_series(4, qmax), region),
            Form::E6 => q_to_series(&eisenstein_series(6, qmax), region),
            Form::Delta12 => q_to_series(&delta12(qmax), region),
        };
        s.restrict(region).map_err(|x| e(&x))
    }
}

fn q_to_series(q: &QSeries, region: TruncRegion) -> FourierSeries3 {
    let terms = q.iter().map(|(e4, c)| (ExpTriple::new(*e4, 0, 0), GaussInt::from(c.clone())));
    FourierSeries3::from_terms(terms, region)
}

fn jacobi_to_series(phi: &JacobiSeries, region: TruncRegion) -> FourierSeries3 {
    let terms = phi.iter().map(|((n2, l2), c)| (ExpTriple::new(2 * n2, 2 * l2, region.mmax4), GaussInt::from(c.clone())));
    FourierSeries3::from_terms(terms, region)
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Form {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Form::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown form {s}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn names_round_trip() {
        for f in Form::ALL {
            assert_eq!(f.name().parse::<Form>().unwrap(), f);
        }
        assert!("delta7.theta".parse::<Form>().is_err());
    }

    #[test]
    fn j_rows() {
        let t = Tables::new();
        let s = Form::J.expand(&t, 3).unwrap();
        let row = |n: i64| s.coeff_real(&ExpTriple::new(4 * n, 0, 0));
        assert_eq!(row(-1), BigInt::from(1));
        assert_eq!(row(0), BigInt::from(744));
        assert_eq!(row(1), BigInt::from(196884));
        assert_eq!(row(2), BigInt::from(21493760));
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn small_orders_refused() {
        let t = Tables::new();
        assert!(Form::Delta5Theta.expand(&t, 3).is_err());
        assert!(Form::E4.expand(&t, 0).is_err());
    }
}
