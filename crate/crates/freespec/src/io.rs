//! JSON interchange: complex entries are `[re, im]` pairs, matrices are row-major.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMat, CVec};

pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_repr(m: &CMat) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_repr(rows: &MatrixRepr) -> Result<CMat, String> {
    let r = rows.len();
    let cl = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != cl) {
        return Err("ragged matrix rows".into());
    }
    let mut m = CMat::zeros(r, cl);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if !(e[0].is_finite() && e[1].is_finite()) {
                return Err(format!("non-finite entry at ({i}, {j})"));
            }
            m[(i, j)] = Complex64::new(e[0], e[1]);
        }
    }
    Ok(m)
}

pub fn vector_to_repr(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_repr(v: &[[f64; 2]]) -> Result<CVec, String> {
    if v.iter().any(|e| !(e[0].is_finite() && e[1].is_finite())) {
        return Err("non-finite vector entry".into());
    }
    Ok(CVec::from_iterator(
        v.len(),
        v.iter().map(|e| Complex64::new(e[0], e[1])),
    ))
}

/// `#[serde(with = "io::cmat")]`
pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_repr(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        matrix_from_repr(&repr).map_err(serde::de::Error::custom)
    }
}

pub mod cmat_opt {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<CMat>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(matrix_to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMat>, D::Error> {
        let repr = Option::<MatrixRepr>::deserialize(d)?;
        repr.map(|r| matrix_from_repr(&r).map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub mod cmat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(matrix_to_repr)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        let repr = Vec::<MatrixRepr>::deserialize(d)?;
        repr.iter()
            .map(|r| matrix_from_repr(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        vector_to_repr(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let repr = Vec::<[f64; 2]>::deserialize(d)?;
        vector_from_repr(&repr).map_err(serde::de::Error::custom)
    }
}

pub mod cvec_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<CVec>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(vector_to_repr).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CVec>, D::Error> {
        let repr = Option::<Vec<[f64; 2]>>::deserialize(d)?;
        repr.map(|r| vector_from_repr(&r).map_err(serde::de::Error::custom))
            .transpose()
    }
}
