//! Serde helpers for complex vectors and matrices.
//!
//! Complex numbers are written as `[re, im]` pairs. On input a bare number is
//! also accepted as a purely real entry.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMat, CVec};

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub(crate) enum ComplexRepr {
    Pair([f64; 2]),
    Real(f64),
}

impl From<ComplexRepr> for Complex64 {
    fn from(r: ComplexRepr) -> Self {
        match r {
            ComplexRepr::Pair([re, im]) => Complex64::new(re, im),
            ComplexRepr::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub(crate) fn vec_to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn mat_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn rows_to_mat(rows: Vec<Vec<ComplexRepr>>) -> Result<CMat, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err("matrix rows have unequal lengths".into());
    }
    let mut out = CMat::zeros(n, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, z) in row.into_iter().enumerate() {
            out[(i, j)] = z.into();
        }
    }
    Ok(out)
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        vec_to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let raw: Vec<ComplexRepr> = Vec::deserialize(d)?;
        Ok(CVec::from_iterator(raw.len(), raw.into_iter().map(Into::into)))
    }
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        mat_to_rows(m).serialize(s)
    }
}

/// Writes non-finite values as the strings `"+inf"`, `"-inf"`, `"nan"`.
pub mod extended_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}
