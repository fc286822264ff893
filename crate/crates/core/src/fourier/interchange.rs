use super::{ExpTriple, FourierError, FourierSeries3, GaussInt, LBound, TruncRegion};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Serialize, Deserialize)]
struct RegionDoc {
    nmax4: i64,
    mmax4: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lmax4: Option<i64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesDoc {
    form: String,
    unit: i64,
    region: RegionDoc,
    coeffs: Vec<(i64, i64, i64, String, String)>,
}

/// Canonical interchange text: one JSON object, coefficients in canonical
/// order, integers as decimal strings, trailing newline.
pub fn to_interchange(form: &str, s: &FourierSeries3) -> String {
    let r = s.region();
    let doc = SeriesDoc {
        form: form.to_string(),
        unit: 4,
        region: RegionDoc {
            nmax4: r.nmax4,
            mmax4: r.mmax4,
            lmax4: match r.lbound {
                LBound::AllAdmissible => None,
                LBound::Explicit(l) => Some(l),
            },
        },
        coeffs: s
            .iter()
            .map(|(e, c)| (e.n4, e.l4, e.m4, c.re.to_string(), c.im.to_string()))
            .collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("serializable");
    out.push('\n');
    out
}

/// Parse interchange text back into `(form, series)`.
pub fn from_interchange(text: &str) -> Result<(String, FourierSeries3), FourierError> {
    let bad = |m: String| FourierError::Interchange(m);
    let doc: SeriesDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.unit != 4 {
        return Err(bad(format!("unsupported unit {}", doc.unit)));
    }
    let mut region = TruncRegion::new(doc.region.nmax4, doc.region.mmax4);
    if let Some(l) = doc.region.lmax4 {
        region = region.with_lmax4(l);
    }
    let mut map = BTreeMap::new();
    for (n4, l4, m4, re, im) in doc.coeffs {
        let re: BigInt = re.parse().map_err(|_| bad(format!("bad integer {re}")))?;
        let im: BigInt = im.parse().map_err(|_| bad(format!("bad integer {im}")))?;
        let e = ExpTriple::new(n4, l4, m4);
        let c = GaussInt { re, im };
        if c.is_zero() || !region.contains(&e) {
            return Err(bad(format!("stored term {e} is zero or outside the region")));
        }
        if map.insert(e, c).is_some() {
            return Err(bad(format!("duplicate exponent {e}")));
        }
    }
    Ok((doc.form, FourierSeries3::from_map(map, region)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = FourierSeries3::from_terms(
            [
                (ExpTriple::new(2, -2, 2), GaussInt::new(-1, 0)),
                (ExpTriple::new(2, 2, 2), GaussInt::new(1, 3)),
            ],
            TruncRegion::square(8),
        );
        let text = to_interchange("x", &s);
        assert!(text.starts_with("{\"form\":\"x\",\"unit\":4,\"region\":{\"nmax4\":8,\"mmax4\":8}"));
        let (form, back) = from_interchange(&text).unwrap();
        assert_eq!(form, "x");
        assert_eq!(back, s);
        assert_eq!(to_interchange("x", &back), text);
    }
}
