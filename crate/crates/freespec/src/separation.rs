//! Separating homogeneous pencils at boundary points of free circular
//! free spectrahedra.
//!
//! For a detailed boundary point `(X, v)` the functional
//! `L(Y) = 2 Σ_j ⟨(A_j ⊗ Y_j) v, v⟩` satisfies `Re L ≤ 1` on `D_A` with
//! equality at `X`. A completely positive map carrying `A_j` to
//! `[[0, B_j], [0, 0]]` under `T_1 ⊕ T_2` then yields
//! `Q_j = T_1^{-1/2} B_j T_2^{-1/2}` with `‖Λ_Q‖ ≤ 1` on `D_A` and
//! `‖Λ_Q(X)‖ = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::sample_member;
use crate::inclusion_sdp::{
    choi_apply, solve_feasibility_with, LinearTerm, SdpProblem, SolverOptions,
};
use crate::io;
use crate::linalg::{eigh, identity, spectral_norm, CMat, CVec, I, ONE, ZERO};
use crate::pencil_core::{boundary_scale, eval_monic, membership, pencil_ball_norm};
use crate::rng::derive;
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;

/// A point `X` of `D_A` with a unit vector `v` in the kernel of `L_A(X)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetailedBoundaryPoint {
    #[serde(rename = "X")]
    pub x: MatrixTuple,
    #[serde(with = "io::cvec")]
    pub v: CVec,
}

/// `L(Y) = Σ_j tr(Y_j M_j)`; `m` holds the representers `M_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunctional {
    pub m: MatrixTuple,
}

impl BoundaryFunctional {
    pub fn eval(&self, y: &MatrixTuple) -> Result<Complex64> {
        if y.g() != self.m.g() || y.rows() != self.m.rows() || !y.is_square() {
            return Err(Error::DimensionMismatch(
                "functional and point differ in shape".into(),
            ));
        }
        Ok(y.mats()
            .iter()
            .zip(self.m.mats())
            .map(|(yj, mj)| (yj * mj).trace())
            .sum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometries {
    #[serde(with = "io::cmat")]
    pub left: CMat,
    #[serde(with = "io::cmat")]
    pub right: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationNorms {
    pub at_boundary: f64,
    pub sup_sampled: f64,
    /// `1 − max ‖Λ_Q(Y)‖` over sampled interior points.
    pub interior_margin: f64,
    /// Interior coordinate radius certified by the level-one probes.
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    #[serde(rename = "Q")]
    pub q: MatrixTuple,
    #[serde(rename = "B")]
    pub b: MatrixTuple,
    #[serde(rename = "T1", with = "io::cmat")]
    pub t1: CMat,
    #[serde(rename = "T2", with = "io::cmat")]
    pub t2: CMat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compressions: Option<Isometries>,
    pub norms: SeparationNorms,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationOptions {
    pub samples: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        SeparationOptions {
            samples: 200,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

/// Checks `(X, v)` against `A` and returns `v` normalized.
pub fn verify_boundary_point(
    a: &MatrixTuple,
    pt: &DetailedBoundaryPoint,
    tol: &Tolerance,
) -> Result<CVec> {
    let n = pt.x.rows();
    if pt.v.len() != a.d() * n {
        return Err(Error::DimensionMismatch(format!(
            "kernel vector has length {}, expected {}",
            pt.v.len(),
            a.d() * n
        )));
    }
    let norm = pt.v.norm();
    if (norm - 1.0).abs() > tol.bound(1.0) {
        return Err(Error::NotBoundary(format!("kernel vector has norm {norm}")));
    }
    if !membership(a, &pt.x, tol)?.member {
        return Err(Error::NotBoundary(
            "point is outside the spectrahedron".into(),
        ));
    }
    let l = eval_monic(a, &pt.x)?;
    let res = (&l * &pt.v).norm();
    if res > tol.bound(spectral_norm(&l)?) {
        return Err(Error::NotBoundary(format!("‖L(X)v‖ = {res:.3e}")));
    }
    Ok(&pt.v / Complex64::new(norm, 0.0))
}

/// `M_j = 2 Σ_ab (A_j)_ab v_b v_a*` where `v = Σ_a e_a ⊗ v_a`.
pub fn boundary_functional(
    a: &MatrixTuple,
    pt: &DetailedBoundaryPoint,
    tol: &Tolerance,
) -> Result<BoundaryFunctional> {
    let v = verify_boundary_point(a, pt, tol)?;
    let n = pt.x.rows();
    let d = a.d();
    let parts: Vec<CVec> = (0..d).map(|k| v.rows(k * n, n).into_owned()).collect();
    let m = a.map(|aj| {
        let mut out = CMat::zeros(n, n);
        for (ai, va) in parts.iter().enumerate() {
            for (bi, vb) in parts.iter().enumerate() {
                let w = aj[(ai, bi)];
                if w != ZERO {
                    out += vb * va.adjoint() * (w * 2.0);
                }
            }
        }
        out
    });
    Ok(BoundaryFunctional { m })
}

/// `B_ℓ = M_ℓᵀ`, so that `⟨B_ℓ c, d⟩ = L(d̄ cᵀ ⊗ e_ℓ)` and, with the
/// coefficient on the left, `Σ_ℓ ⟨(B_ℓ ⊗ Y_ℓ) ω, ω⟩ = L(Y)` for
/// `ω = Σ_p e_p ⊗ e_p`.
pub fn bilinear_b(l: &BoundaryFunctional) -> MatrixTuple {
    l.m.map(|m| m.transpose())
}

/// Feasible data for the domination `Φ(I) ⪯ T_1 ⊕ T_2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TSolution {
    pub t1: CMat,
    pub t2: CMat,
    /// Upper-right blocks of `Φ(A_j)`, rescaled with the traces.
    pub b: MatrixTuple,
    pub choi: CMat,
}

/// Blocks `C` (Choi of `Φ: M_d → M_2n`), slack `S`, `T_1`, `T_2`.
fn t_problem(a: &MatrixTuple, b: &MatrixTuple) -> SdpProblem {
    let d = a.d();
    let n = b.rows();
    let m = 2 * n;
    let mut p = SdpProblem::new(vec![d * m, m, n, n]);
    p.slack_blocks = vec![1];
    for (aj, bj) in a.mats().iter().zip(b.mats()) {
        for r in 0..m {
            for c in 0..m {
                let mut terms = Vec::new();
                for i in 0..d {
                    for k in 0..d {
                        let w = aj[(i, k)];
                        if w != ZERO {
                            terms.push(LinearTerm::new(0, i * m + r, k * m + c, w));
                        }
                    }
                }
                let rhs = if r < n && c >= n {
                    bj[(r, c - n)]
                } else {
                    ZERO
                };
                p.add(terms, rhs);
            }
        }
    }
    for r in 0..m {
        for c in r..m {
            let mut terms: Vec<LinearTerm> = (0..d)
                .map(|i| LinearTerm::new(0, i * m + r, i * m + c, ONE))
                .collect();
            terms.push(LinearTerm::new(1, r, c, ONE));
            if r < n && c < n {
                terms.push(LinearTerm::new(2, r, c, -ONE));
            } else if r >= n && c >= n {
                terms.push(LinearTerm::new(3, r - n, c - n, -ONE));
            }
            p.add(terms, ZERO);
        }
    }
    for blk in [2, 3] {
        p.add(
            (0..n).map(|i| LinearTerm::new(blk, i, i, ONE)).collect(),
            ONE,
        );
    }
    p
}

/// Solves for `T_1, T_2` and a completely positive `Φ` with
/// `Φ(A_j) = [[0, B_j], [0, 0]]`, then tightens the solution so that
/// `[[T_1, B̃],[B̃*, T_2]]`-domination holds for the map actually found.
pub fn solve_t(a: &MatrixTuple, b: &MatrixTuple, tol: &Tolerance) -> Result<TSolution> {
    solve_t_with(a, b, tol, &SolverOptions::default())
}

pub fn solve_t_with(
    a: &MatrixTuple,
    b: &MatrixTuple,
    tol: &Tolerance,
    options: &SolverOptions,
) -> Result<TSolution> {
    if a.g() != b.g() || !b.is_square() {
        return Err(Error::DimensionMismatch(
            "B must be a square tuple with A's g".into(),
        ));
    }
    let n = b.rows();
    let p = t_problem(a, b);
    let blocks = match solve_feasibility_with(&p, tol, options) {
        Ok(Some(blocks)) => blocks,
        Ok(None) => return Err(Error::NoCertificate("domination problem infeasible".into())),
        Err(Error::IterationLimit(k)) => {
            return Err(Error::NoCertificate(format!(
                "domination problem undecided after {k} iterations"
            )))
        }
        Err(e) => return Err(e),
    };
    let choi = blocks[0].clone();
    let d = a.d();
    let z = choi_apply(&choi, d, &identity(d))? + &blocks[1];
    let off = spectral_norm(&z.view((0, n), (n, n)).into_owned())?;
    let shift = identity(n) * Complex64::new(off, 0.0);
    let t1 = z.view((0, 0), (n, n)).into_owned() + &shift;
    let t2 = z.view((n, n), (n, n)).into_owned() + &shift;
    let (tr1, tr2) = (t1.trace().re, t2.trace().re);
    if tr1 <= 0.0 || tr2 <= 0.0 {
        return Err(Error::NoCertificate(
            "degenerate trace in the domination blocks".into(),
        ));
    }
    let scale = Complex64::new(1.0 / (tr1 * tr2).sqrt(), 0.0);
    let bt = a
        .mats()
        .iter()
        .map(|aj| Ok(choi_apply(&choi, d, aj)?.view((0, n), (n, n)).into_owned() * scale))
        .collect::<Result<Vec<_>>>()?;
    Ok(TSolution {
        t1: t1 / Complex64::new(tr1, 0.0),
        t2: t2 / Complex64::new(tr2, 0.0),
        b: MatrixTuple::new(bt)?,
        choi,
    })
}

/// Range isometry and inverse square root of `t` above the floor `rel·λ_max`.
fn compressed_inverse_sqrt(t: &CMat, tol: &Tolerance) -> Result<(CMat, CMat, bool)> {
    let (vals, vecs) = eigh(t)?;
    let top = vals.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&k| vals[k] > tol.rel_tol * top)
        .collect();
    let p = crate::linalg::select_columns(&vecs, &keep);
    let inv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        keep.len(),
        keep.iter()
            .map(|&k| Complex64::new(1.0 / vals[k].sqrt(), 0.0)),
    ));
    Ok((p, inv, keep.len() < vals.len()))
}

/// Smallest level-one exit radius along `±e_j` and `±i e_j`.
pub fn interior_radius(a: &MatrixTuple, cap: f64) -> Result<f64> {
    let mut eps = cap;
    for j in 0..a.g() {
        for z in [ONE, -ONE, I, -I] {
            let mut vals = vec![ZERO; a.g()];
            vals[j] = z;
            if let Some(t) = boundary_scale(a, &MatrixTuple::scalars(&vals))? {
                eps = eps.min(t);
            }
        }
    }
    Ok(eps)
}

pub fn separate(
    a: &MatrixTuple,
    pt: &DetailedBoundaryPoint,
    tol: &Tolerance,
) -> Result<SeparationCertificate> {
    separate_with(a, pt, tol, &SeparationOptions::default())
}

pub fn separate_with(
    a: &MatrixTuple,
    pt: &DetailedBoundaryPoint,
    tol: &Tolerance,
    options: &SeparationOptions,
) -> Result<SeparationCertificate> {
    let l = boundary_functional(a, pt, tol)?;
    let b = bilinear_b(&l);
    let sol = solve_t_with(a, &b, tol, &options.solver)?;
    let (p1, r1, c1) = compressed_inverse_sqrt(&sol.t1, tol)?;
    let (p2, r2, c2) = compressed_inverse_sqrt(&sol.t2, tol)?;
    let q = sol.b.map(|bj| &r1 * p1.adjoint() * bj * &p2 * &r2);
    let compressions = (c1 || c2).then(|| Isometries {
        left: p1.clone(),
        right: p2.clone(),
    });

    let at_boundary = pencil_ball_norm(&q, &pt.x)?;
    let mut rng = derive(options.seed, 0x5e9a);
    let mut sup: f64 = 0.0;
    let mut interior: f64 = 0.0;
    for k in 0..options.samples {
        let level = 1 + k % 4;
        let y = sample_member(a, level, &mut rng)?;
        sup = sup.max(pencil_ball_norm(&q, &y)?);
        interior = interior.max(pencil_ball_norm(&q, &y.scale(Complex64::new(0.9, 0.0)))?);
    }
    let epsilon = interior_radius(a, crate::generate::SCALE_CAP)?;
    let norms = SeparationNorms {
        at_boundary,
        sup_sampled: sup,
        interior_margin: 1.0 - interior,
        epsilon,
    };
    if (at_boundary - 1.0).abs() > 100.0 * tol.bound(1.0) {
        return Err(Error::NormDefect(at_boundary - 1.0));
    }
    if options.samples > 0 && norms.interior_margin <= 0.0 {
        return Err(Error::NormDefect(-norms.interior_margin));
    }
    Ok(SeparationCertificate {
        q,
        b,
        t1: sol.t1,
        t2: sol.t2,
        compressions,
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::boundary_point;
    use crate::linalg::c;

    fn disk() -> MatrixTuple {
        MatrixTuple::new(vec![CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])]).unwrap()
    }

    fn ball(g: usize) -> MatrixTuple {
        MatrixTuple::new(
            (0..g)
                .map(|j| {
                    let mut m = CMat::zeros(g + 1, g + 1);
                    m[(0, j + 1)] = ONE;
                    m
                })
                .collect(),
        )
        .unwrap()
    }

    fn disk_point(theta: f64) -> DetailedBoundaryPoint {
        let z = Complex64::from_polar(1.0, theta);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DetailedBoundaryPoint {
            x: MatrixTuple::scalars(&[z]),
            v: CVec::from_vec(vec![z * s, c(s, 0.0)]),
        }
    }

    #[test]
    fn disk_functional_is_phase() {
        let tol = Tolerance::default();
        for theta in [0.0, 0.7, std::f64::consts::FRAC_PI_2] {
            let l = boundary_functional(&disk(), &disk_point(theta), &tol).unwrap();
            let expected = Complex64::from_polar(1.0, -theta);
            assert!((l.m.get(0)[(0, 0)] - expected).norm() < 1e-14);
            let at = l.eval(&disk_point(theta).x).unwrap();
            assert!((at - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn b_reconstructs_functional() {
        let tol = Tolerance::default();
        let pt = boundary_point(&ball(2), 3, 4).unwrap();
        let l = boundary_functional(&ball(2), &pt, &tol).unwrap();
        let b = bilinear_b(&l);
        for ell in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    // ⟨B e_i, e_j⟩ = L(e_j e_iᵀ ⊗ e_ℓ)
                    let mut y = MatrixTuple::zeros(2, 3).into_mats();
                    y[ell][(j, i)] = ONE;
                    let val = l.eval(&MatrixTuple::new(y).unwrap()).unwrap();
                    assert!((b.get(ell)[(j, i)] - val).norm() < 1e-14);
                }
            }
        }
        let zero = BoundaryFunctional {
            m: MatrixTuple::zeros(2, 3),
        };
        assert!(bilinear_b(&zero).is_zero(0.0));
    }

    #[test]
    fn functional_bounded_on_members() {
        let tol = Tolerance::default();
        let a = ball(2);
        let pt = boundary_point(&a, 2, 9).unwrap();
        let l = boundary_functional(&a, &pt, &tol).unwrap();
        assert!((l.eval(&pt.x).unwrap().re - 1.0).abs() < 1e-9);
        let mut rng = derive(3, 3);
        for _ in 0..200 {
            let y = sample_member(&a, 2, &mut rng).unwrap();
            assert!(l.eval(&y).unwrap().re <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn scalar_disk_t_is_one() {
        let tol = Tolerance::default();
        let b = MatrixTuple::scalars(&[ONE]);
        let sol = solve_t(&disk(), &b, &tol).unwrap();
        assert!((sol.t1[(0, 0)] - ONE).norm() < 1e-8);
        assert!((sol.t2[(0, 0)] - ONE).norm() < 1e-8);
    }

    #[test]
    fn disk_separation_at_one_and_i() {
        let tol = Tolerance::default();
        let cert = separate(&disk(), &disk_point(0.0), &tol).unwrap();
        assert!((cert.q.get(0)[(0, 0)] - ONE).norm() < 1e-6);
        assert!((cert.norms.at_boundary - 1.0).abs() < 1e-8);
        let cert = separate(&disk(), &disk_point(std::f64::consts::FRAC_PI_2), &tol).unwrap();
        assert!((cert.q.get(0)[(0, 0)] + I).norm() < 1e-6);
    }

    #[test]
    fn ball_level_two_certificate() {
        let tol = Tolerance::default();
        let a = ball(2);
        let pt = boundary_point(&a, 2, 1).unwrap();
        let cert = separate(&a, &pt, &tol).unwrap();
        assert!((cert.norms.at_boundary - 1.0).abs() < 1e-6);
        assert!(cert.norms.sup_sampled <= 1.0 + 1e-7);
        assert!(cert.norms.interior_margin > 0.0);
        assert!((cert.t1.trace().re - 1.0).abs() < 1e-8 && (cert.t2.trace().re - 1.0).abs() < 1e-8);
        for qj in cert.q.mats() {
            assert!(spectral_norm(qj).unwrap() <= 1.0 / cert.norms.epsilon + 1e-6);
        }
    }

    #[test]
    fn off_boundary_point_rejected() {
        let pt = DetailedBoundaryPoint {
            x: MatrixTuple::scalars(&[c(0.5, 0.0)]),
            v: CVec::from_vec(vec![ONE, ZERO]),
        };
        assert!(matches!(
            boundary_functional(&disk(), &pt, &Tolerance::default()),
            Err(Error::NotBoundary(_))
        ));
    }
}
