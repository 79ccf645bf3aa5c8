use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{matrix_from_repr, matrix_to_repr, MatrixRepr};
use crate::linalg::{block_diag, is_finite, CMat};

/// A g-tuple of equally shaped complex matrices.
///
/// Coefficient tuples of pencils are square (`d x d`); evaluation points are
/// square `n x n`. Rectangular tuples appear as pencil-ball data `F` and as
/// compressed separating pencils.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TupleRepr", into = "TupleRepr")]
pub struct MatrixTuple {
    mats: Vec<CMat>,
}

#[derive(Serialize, Deserialize)]
struct TupleRepr {
    g: usize,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    matrices: Vec<MatrixRepr>,
}

impl TryFrom<TupleRepr> for MatrixTuple {
    type Error = String;

    fn try_from(r: TupleRepr) -> std::result::Result<Self, String> {
        if r.matrices.len() != r.g {
            return Err(format!(
                "g = {} but {} matrices given",
                r.g,
                r.matrices.len()
            ));
        }
        let cols = r.cols.unwrap_or(r.d);
        let mut mats = Vec::with_capacity(r.g);
        for (k, m) in r.matrices.iter().enumerate() {
            let m = matrix_from_repr(m).map_err(|e| format!("matrix {k}: {e}"))?;
            if m.shape() != (r.d, cols) {
                return Err(format!(
                    "matrix {k} has shape {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    r.d,
                    cols
                ));
            }
            mats.push(m);
        }
        MatrixTuple::new(mats).map_err(|e| e.to_string())
    }
}

impl From<MatrixTuple> for TupleRepr {
    fn from(t: MatrixTuple) -> Self {
        let (d, cols) = (t.rows(), t.cols());
        TupleRepr {
            g: t.g(),
            d,
            cols: (cols != d).then_some(cols),
            matrices: t.mats.iter().map(matrix_to_repr).collect(),
        }
    }
}

impl MatrixTuple {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::InvalidInput(
                "a tuple needs at least one matrix".into(),
            ));
        };
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::InvalidInput("matrices must be non-empty".into()));
        }
        if mats.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch(
                "tuple entries differ in shape".into(),
            ));
        }
        if !mats.iter().all(is_finite) {
            return Err(Error::NonFinite("matrix tuple"));
        }
        Ok(MatrixTuple { mats })
    }

    pub fn zeros(g: usize, d: usize) -> Self {
        MatrixTuple {
            mats: vec![CMat::zeros(d, d); g.max(1)],
        }
    }

    /// Level-one point from scalars.
    pub fn scalars(values: &[Complex64]) -> Self {
        MatrixTuple {
            mats: values
                .iter()
                .map(|&z| CMat::from_element(1, 1, z))
                .collect(),
        }
    }

    pub fn g(&self) -> usize {
        self.mats.len()
    }

    pub fn rows(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.mats[0].ncols()
    }

    /// Matrix size of a square tuple (row count otherwise).
    pub fn d(&self) -> usize {
        self.rows()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    pub fn into_mats(self) -> Vec<CMat> {
        self.mats
    }

    pub fn get(&self, j: usize) -> &CMat {
        &self.mats[j]
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        MatrixTuple {
            mats: self.mats.iter().map(f).collect(),
        }
    }

    /// `(U* A_j U)_j`.
    pub fn conjugate(&self, u: &CMat) -> Self {
        let ua = u.adjoint();
        self.map(|a| &ua * a * u)
    }

    /// `(V* A_j W)_j` for possibly different isometries.
    pub fn compress(&self, v: &CMat, w: &CMat) -> Self {
        let va = v.adjoint();
        self.map(|a| &va * a * w)
    }

    /// `(U X_j)_j`.
    pub fn left_multiply(&self, u: &CMat) -> Self {
        self.map(|x| u * x)
    }

    pub fn scale(&self, t: Complex64) -> Self {
        self.map(|a| a * t)
    }

    pub fn adjoint(&self) -> Self {
        self.map(|a| a.adjoint())
    }

    pub fn direct_sum(&self, other: &MatrixTuple) -> Result<Self> {
        if self.g() != other.g() {
            return Err(Error::DimensionMismatch(format!(
                "direct sum of {}-tuple and {}-tuple",
                self.g(),
                other.g()
            )));
        }
        Ok(MatrixTuple {
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| block_diag(&[a.clone(), b.clone()]))
                .collect(),
        })
    }

    pub fn direct_sum_all(parts: &[MatrixTuple]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidInput("empty direct sum".into()));
        };
        let g = first.g();
        if parts.iter().any(|p| p.g() != g) {
            return Err(Error::DimensionMismatch(
                "direct sum of tuples with different g".into(),
            ));
        }
        let mats = (0..g)
            .map(|j| block_diag(&parts.iter().map(|p| p.mats[j].clone()).collect::<Vec<_>>()))
            .collect();
        Ok(MatrixTuple { mats })
    }

    /// `sqrt(sum_j ||A_j||_F^2)`.
    pub fn norm(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &MatrixTuple) -> f64 {
        self.mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self, threshold: f64) -> bool {
        self.norm() <= threshold
    }

    /// Restrict to rows/cols `start..start+len`.
    pub fn block(&self, start: usize, len: usize) -> Self {
        self.map(|a| a.view((start, start), (len, len)).into_owned())
    }
}
