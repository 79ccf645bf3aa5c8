//! Pencils, Kronecker evaluation and membership in free spectrahedra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{eigh, hermitian_part, identity, kron, spectral_norm, CMat, CVec, ONE};
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;

/// `Λ_A(x) = Σ A_j x_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPencil {
    pub coefficients: MatrixTuple,
}

/// `L_A(x) = I − Σ A_j x_j − Σ A_j* x_j*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonicPencil {
    pub coefficients: MatrixTuple,
}

impl HomogeneousPencil {
    pub fn new(coefficients: MatrixTuple) -> Self {
        HomogeneousPencil { coefficients }
    }

    pub fn eval(&self, x: &MatrixTuple) -> Result<CMat> {
        eval_homogeneous(&self.coefficients, x)
    }

    pub fn norm_at(&self, x: &MatrixTuple) -> Result<f64> {
        pencil_ball_norm(&self.coefficients, x)
    }
}

impl MonicPencil {
    pub fn new(coefficients: MatrixTuple) -> Result<Self> {
        if !coefficients.is_square() {
            return Err(Error::InvalidInput(
                "monic pencil needs square coefficients".into(),
            ));
        }
        Ok(MonicPencil { coefficients })
    }

    pub fn eval(&self, x: &MatrixTuple) -> Result<CMat> {
        eval_monic(&self.coefficients, x)
    }

    pub fn membership(&self, x: &MatrixTuple, tol: &Tolerance) -> Result<MembershipReport> {
        membership(&self.coefficients, x, tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    pub min_eigenvalue: f64,
    pub boundary: bool,
    #[serde(
        with = "io::cvec_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub kernel_vector: Option<CVec>,
}

fn check_point(a: &MatrixTuple, x: &MatrixTuple) -> Result<()> {
    if a.g() != x.g() {
        return Err(Error::DimensionMismatch(format!(
            "pencil has {} variables, point has {}",
            a.g(),
            x.g()
        )));
    }
    if !x.is_square() {
        return Err(Error::InvalidInput(
            "evaluation point must be a tuple of square matrices".into(),
        ));
    }
    Ok(())
}

/// `Σ_j A_j ⊗ X_j`, coefficient on the left.
pub fn eval_homogeneous(a: &MatrixTuple, x: &MatrixTuple) -> Result<CMat> {
    check_point(a, x)?;
    let n = x.rows();
    let mut out = CMat::zeros(a.rows() * n, a.cols() * n);
    for (aj, xj) in a.mats().iter().zip(x.mats()) {
        out += kron(aj, xj);
    }
    Ok(out)
}

/// `I − Λ_A(X) − Λ_A(X)*`, returned exactly Hermitian.
pub fn eval_monic(a: &MatrixTuple, x: &MatrixTuple) -> Result<CMat> {
    if !a.is_square() {
        return Err(Error::InvalidInput(
            "monic pencil needs square coefficients".into(),
        ));
    }
    let lam = eval_homogeneous(a, x)?;
    let n = lam.nrows();
    let l = identity(n) - &lam - lam.adjoint();
    Ok(hermitian_part(&l))
}

pub fn membership(a: &MatrixTuple, x: &MatrixTuple, tol: &Tolerance) -> Result<MembershipReport> {
    let l = eval_monic(a, x)?;
    let (vals, vecs) = eigh(&l)?;
    let min_eigenvalue = vals[0];
    let scale = vals[0].abs().max(vals[vals.len() - 1].abs());
    let member = min_eigenvalue >= -tol.bound(scale);
    let boundary = member && min_eigenvalue.abs() <= tol.boundary_band();
    let kernel_vector = boundary.then(|| vecs.column(0).into_owned());
    Ok(MembershipReport {
        member,
        min_eigenvalue,
        boundary,
        kernel_vector,
    })
}

/// Smallest eigenvalue of `L_A(X)`.
pub fn min_eigenvalue(a: &MatrixTuple, x: &MatrixTuple) -> Result<f64> {
    Ok(eigh(&eval_monic(a, x)?)?.0[0])
}

/// Operator norm of `Λ_F(X)`; `F` may be rectangular.
pub fn pencil_ball_norm(f: &MatrixTuple, x: &MatrixTuple) -> Result<f64> {
    spectral_norm(&eval_homogeneous(f, x)?)
}

/// Permutation `Π` of size `ℓν` with `B ⊗ Z = Π* (Z ⊗ B) Π` for `B` of size `ℓ`, `Z` of size `ν`.
pub fn canonical_shuffle(ell: usize, nu: usize) -> Result<CMat> {
    if ell == 0 || nu == 0 {
        return Err(Error::InvalidInput("shuffle sizes must be positive".into()));
    }
    // Π maps e_i ⊗ f_k (index i·ν + k) to f_k ⊗ e_i (index k·ℓ + i).
    let n = ell * nu;
    let mut p = CMat::zeros(n, n);
    for i in 0..ell {
        for k in 0..nu {
            p[(k * ell + i, i * nu + k)] = ONE;
        }
    }
    Ok(p)
}

/// Largest `t` with `t·Y` in the spectrahedron, `None` when the ray never leaves it.
pub fn boundary_scale(a: &MatrixTuple, y: &MatrixTuple) -> Result<Option<f64>> {
    let lam = eval_homogeneous(a, y)?;
    let h = &lam + lam.adjoint();
    let top = eigh(&h)?.0.last().copied().unwrap_or(0.0);
    let scale = h.norm().max(1.0);
    if top <= 1e-13 * scale {
        Ok(None)
    } else {
        Ok(Some(1.0 / top))
    }
}
