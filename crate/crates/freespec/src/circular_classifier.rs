//! Circularity through a Hermitian grading operator `K` with
//! `A_s K − K A_s = A_s`, and the block superdiagonal canonical form it induces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::sample_member;
use crate::io;
use crate::linalg::{block_diag, eigh, lstsq_real, CMat, I, ONE};
use crate::pencil_core::min_eigenvalue;
use crate::rng::derive;
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;
use crate::tuple_algebra::{irreducible_blocks, minimize_pencil, MinimalityCertificate};

const ROUNDING_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub level: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradingCertificate {
    #[serde(rename = "K", with = "io::cmat")]
    pub k: CMat,
    pub levels: Vec<Level>,
    /// Eigenvectors of `K`, grouped by irreducible summand and ordered by
    /// ascending level inside each summand.
    #[serde(with = "io::cmat")]
    pub basis: CMat,
    pub summand_sizes: Vec<usize>,
    /// `max_s ‖A_s K − K A_s − A_s‖_F`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperdiagonalForm {
    #[serde(with = "io::cmat")]
    pub basis: CMat,
    /// Level sizes per irreducible summand.
    pub block_sizes: Vec<Vec<usize>>,
    pub transformed: MatrixTuple,
    /// Maximal admissible chains as indices into the flattened level blocks.
    pub chains: Vec<Vec<usize>>,
}

impl SuperdiagonalForm {
    pub fn flat_block_sizes(&self) -> Vec<usize> {
        self.block_sizes.iter().flatten().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularClassification {
    pub circular: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<GradingCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<SuperdiagonalForm>,
    pub minimality: MinimalityCertificate,
}

pub fn grading_residual(a: &MatrixTuple, k: &CMat) -> f64 {
    a.mats()
        .iter()
        .map(|m| (m * k - k * m - m).norm())
        .fold(0.0, f64::max)
}

/// Orthonormal basis of `m x m` Hermitian matrices.
fn hermitian_basis(m: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        let mut e = CMat::zeros(m, m);
        e[(i, i)] = ONE;
        out.push(e);
        for j in i + 1..m {
            let mut re = CMat::zeros(m, m);
            re[(i, j)] = Complex64::new(s, 0.0);
            re[(j, i)] = Complex64::new(s, 0.0);
            out.push(re);
            let mut im = CMat::zeros(m, m);
            im[(i, j)] = I * s;
            im[(j, i)] = -I * s;
            out.push(im);
        }
    }
    out
}

/// Minimum-norm Hermitian least-squares solution of `A_s K − K A_s = A_s`.
fn least_squares_grading(a: &MatrixTuple) -> Result<CMat> {
    let m = a.d();
    let basis = hermitian_basis(m);
    let per = m * m;
    let rows = 2 * a.g() * per;
    let mut mat = DMatrix::<f64>::zeros(rows, basis.len());
    let mut rhs = DVector::<f64>::zeros(rows);
    for (s, am) in a.mats().iter().enumerate() {
        for (idx, z) in am.iter().enumerate() {
            rhs[2 * s * per + idx] = z.re;
            rhs[(2 * s + 1) * per + idx] = z.im;
        }
        for (k, h) in basis.iter().enumerate() {
            let img = am * h - h * am;
            for (idx, z) in img.iter().enumerate() {
                mat[(2 * s * per + idx, k)] = z.re;
                mat[((2 * s + 1) * per + idx, k)] = z.im;
            }
        }
    }
    let x = lstsq_real(&mat, &rhs, 1e-12)?;
    let mut k = CMat::zeros(m, m);
    for (coef, h) in x.iter().zip(&basis) {
        k += h * Complex64::new(*coef, 0.0);
    }
    Ok(k)
}

/// Solves for the grading operator blockwise on the irreducible summands.
/// Returns `None` when no Hermitian solution exists at tolerance.
pub fn solve_grading(a: &MatrixTuple, tol: &Tolerance) -> Result<Option<GradingCertificate>> {
    if !a.is_square() {
        return Err(Error::InvalidInput(
            "grading needs square coefficients".into(),
        ));
    }
    let threshold = tol.rel_tol * (1.0 + a.norm());
    let dec = irreducible_blocks(a, tol, 0)?;
    let mut ks = Vec::with_capacity(dec.blocks.len());
    let mut vs = Vec::with_capacity(dec.blocks.len());
    for blk in &dec.blocks {
        let k = least_squares_grading(blk)?;
        if grading_residual(blk, &k) > threshold {
            return Ok(None);
        }
        let (vals, vecs) = eigh(&k)?;
        let base = vals[0];
        let mut rounded = Vec::with_capacity(vals.len());
        for &l in &vals {
            let shifted = l - base;
            let r = shifted.round();
            if (shifted - r).abs() > ROUNDING_LIMIT {
                return Err(Error::AmbiguousLevels((shifted - r).abs()));
            }
            rounded.push(r);
        }
        if let Some(w) = rounded.windows(2).find(|w| w[1] - w[0] > 1.0) {
            return Err(Error::AmbiguousLevels(w[1] - w[0]));
        }
        let mut scaled = vecs.clone();
        for (j, &r) in rounded.iter().enumerate() {
            scaled.column_mut(j).scale_mut(r);
        }
        ks.push(scaled * vecs.adjoint());
        vs.push(vecs);
    }
    let q = &dec.change_of_basis;
    let k = q * block_diag(&ks) * q.adjoint();
    let k = (&k + k.adjoint()) * Complex64::new(0.5, 0.0);
    let residual = grading_residual(a, &k);
    if residual > threshold {
        return Err(Error::AmbiguousLevels(residual));
    }
    let basis = q * block_diag(&vs);
    let diag = level_labels(&k, &basis);
    let mut levels: Vec<Level> = Vec::new();
    let mut sorted = diag.clone();
    sorted.sort_by(f64::total_cmp);
    for l in sorted {
        match levels.last_mut() {
            Some(last) if last.level == l => last.multiplicity += 1,
            _ => levels.push(Level {
                level: l,
                multiplicity: 1,
            }),
        }
    }
    Ok(Some(GradingCertificate {
        k,
        levels,
        basis,
        summand_sizes: dec.block_sizes.clone(),
        residual,
    }))
}

fn level_labels(k: &CMat, basis: &CMat) -> Vec<f64> {
    let d = basis.adjoint() * k * basis;
    (0..d.nrows()).map(|i| d[(i, i)].re.round()).collect()
}

struct LevelBlock {
    summand: usize,
    level: f64,
    start: usize,
    size: usize,
}

/// Block superdiagonal form in the certificate's basis: `A_s` only has
/// blocks from level `λ+1` to level `λ` inside each summand.
pub fn superdiagonal_form(
    cert: &GradingCertificate,
    a: &MatrixTuple,
    tol: &Tolerance,
) -> Result<SuperdiagonalForm> {
    if cert.basis.nrows() != a.d() {
        return Err(Error::DimensionMismatch(
            "certificate and tuple sizes differ".into(),
        ));
    }
    let labels = level_labels(&cert.k, &cert.basis);
    let mut blocks: Vec<LevelBlock> = Vec::new();
    let mut start = 0;
    for (summand, &size) in cert.summand_sizes.iter().enumerate() {
        for idx in start..start + size {
            match blocks.last_mut() {
                Some(b) if b.summand == summand && b.level == labels[idx] => b.size += 1,
                _ => blocks.push(LevelBlock {
                    summand,
                    level: labels[idx],
                    start: idx,
                    size: 1,
                }),
            }
        }
        start += size;
    }
    let allowed =
        |p: &LevelBlock, q: &LevelBlock| p.summand == q.summand && q.level == p.level + 1.0;

    let mut transformed = a.conjugate(&cert.basis).into_mats();
    let mut worst: f64 = 0.0;
    let mut nonzero = vec![vec![false; blocks.len()]; blocks.len()];
    for (m, orig) in transformed.iter_mut().zip(a.mats()) {
        let bound = tol.bound(orig.norm());
        for (pi, p) in blocks.iter().enumerate() {
            for (qi, q) in blocks.iter().enumerate() {
                let mut view = m.view_mut((p.start, q.start), (p.size, q.size));
                let norm = view.norm();
                if allowed(p, q) {
                    if norm > bound {
                        nonzero[pi][qi] = true;
                    }
                    for z in view.iter_mut() {
                        if z.norm() <= tol.abs_tol {
                            *z = Complex64::new(0.0, 0.0);
                        }
                    }
                } else {
                    worst = worst.max(norm);
                    view.fill(Complex64::new(0.0, 0.0));
                    if norm > bound {
                        return Err(Error::NotSuperdiagonal(norm));
                    }
                }
            }
        }
    }
    let _ = worst;

    let mut block_sizes: Vec<Vec<usize>> = vec![Vec::new(); cert.summand_sizes.len()];
    for b in &blocks {
        block_sizes[b.summand].push(b.size);
    }
    let chains = admissible_chains(&nonzero);
    Ok(SuperdiagonalForm {
        basis: cert.basis.clone(),
        block_sizes,
        transformed: MatrixTuple::new(transformed)?,
        chains,
    })
}

/// From every block zero column, follow nonzero locations `(j, q)` until the
/// chain cannot be extended without repeating an index.
fn admissible_chains(nonzero: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = nonzero.len();
    let zero_columns = (0..n).filter(|&q| (0..n).all(|p| !nonzero[p][q]));
    let mut chains = Vec::new();
    for j0 in zero_columns {
        let mut chain = vec![j0];
        let mut cur = j0;
        while let Some(next) = (0..n).find(|&q| nonzero[cur][q] && !chain.contains(&q)) {
            chain.push(next);
            cur = next;
        }
        chains.push(chain);
    }
    chains
}

/// Minimizes `A`, then grades each irreducible summand of the minimal tuple.
pub fn classify_circular(a: &MatrixTuple, tol: &Tolerance) -> Result<CircularClassification> {
    let minimality = minimize_pencil(a, tol)?;
    let m = &minimality.minimal_tuple;
    let grading = solve_grading(m, tol)?;
    let form = grading
        .as_ref()
        .map(|g| superdiagonal_form(g, m, tol))
        .transpose()?;
    Ok(CircularClassification {
        circular: grading.is_some(),
        grading,
        form,
        minimality,
    })
}

/// Worst `λ_min(L_A(e^{it}X))` over random members `X` at levels `1..=4` and
/// random angles. A one-sided falsifier, not a decision procedure.
pub fn rotation_spot_check(a: &MatrixTuple, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = derive(seed, 0x707a7e);
    let mut worst = f64::INFINITY;
    for k in 0..samples {
        let n = 1 + k % 4;
        let x = sample_member(a, n, &mut rng)?;
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rotated = x.scale(Complex64::from_polar(1.0, t));
        worst = worst.min(min_eigenvalue(a, &rotated)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::superdiagonal_tuple;
    use crate::linalg::{identity, unitary_exp, ZERO};

    fn e12() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }

    fn bidisk() -> MatrixTuple {
        let z = CMat::zeros(2, 2);
        MatrixTuple::new(vec![
            block_diag(&[e12(), z.clone()]),
            block_diag(&[z, e12()]),
        ])
        .unwrap()
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

    #[test]
    fn nilpotent_two_by_two_grading() {
        let a = MatrixTuple::new(vec![e12()]).unwrap();
        let cert = solve_grading(&a, &Tolerance::default()).unwrap().unwrap();
        let expected = CMat::from_diagonal(&DVector::from_vec(vec![ZERO, ONE]));
        assert!((&cert.k - expected).norm() < 1e-10);
        assert!(cert.residual < 1e-12);
        let form = superdiagonal_form(&cert, &a, &Tolerance::default()).unwrap();
        assert_eq!(form.block_sizes, vec![vec![1, 1]]);
        assert_eq!(form.chains, vec![vec![0, 1]]);
    }

    #[test]
    fn identity_coefficient_has_no_grading() {
        let a = MatrixTuple::new(vec![identity(2)]).unwrap();
        assert_eq!(solve_grading(&a, &Tolerance::default()).unwrap(), None);
        let a = MatrixTuple::scalars(&[ONE]);
        assert!(
            !classify_circular(&a, &Tolerance::default())
                .unwrap()
                .circular
        );
    }

    #[test]
    fn bidisk_grading_and_form() {
        let tol = Tolerance::default();
        let cert = solve_grading(&bidisk(), &tol).unwrap().unwrap();
        assert_eq!(
            cert.levels,
            vec![
                Level {
                    level: 0.0,
                    multiplicity: 2
                },
                Level {
                    level: 1.0,
                    multiplicity: 2
                }
            ]
        );
        let r = classify_circular(&bidisk(), &tol).unwrap();
        assert!(r.circular);
        assert_eq!(r.form.unwrap().block_sizes, vec![vec![1, 1], vec![1, 1]]);
    }

    #[test]
    fn ball_form_is_one_then_g() {
        let tol = Tolerance::default();
        let r = classify_circular(&ball(3), &tol).unwrap();
        let form = r.form.unwrap();
        assert_eq!(form.block_sizes, vec![vec![1, 3]]);
        // level-one block is the row (A_1(1), …, A_g(1)) up to a unitary
        let mut row = CMat::zeros(1, 3);
        for m in form.transformed.mats() {
            row += m.view((0, 1), (1, 3));
        }
        for m in form.transformed.mats() {
            assert!((m.view((0, 1), (1, 3)).norm() - 1.0).abs() < 1e-9);
        }
        let _ = row;
    }

    #[test]
    fn planted_three_levels_recovered() {
        let tol = Tolerance::default();
        let a = superdiagonal_tuple(2, &[1, 2, 1], 7).unwrap();
        let r = classify_circular(&a, &tol).unwrap();
        assert!(r.circular);
        let form = r.form.unwrap();
        assert_eq!(form.block_sizes, vec![vec![1, 2, 1]]);
        assert_eq!(form.chains, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn exponentiated_grading_rotates() {
        let tol = Tolerance::default();
        let a = superdiagonal_tuple(3, &[2, 3, 1], 3).unwrap();
        let cert = solve_grading(&a, &tol).unwrap().unwrap();
        for t in [0.3, 1.7, 2.9, -4.0] {
            let u = unitary_exp(&cert.k, t).unwrap();
            for m in a.mats() {
                let lhs = u.adjoint() * m * &u;
                let rhs = m * Complex64::from_polar(1.0, t);
                assert!((lhs - rhs).norm() <= 10.0 * tol.bound(m.norm()));
            }
        }
    }

    #[test]
    fn spot_check_on_disk_is_nonnegative() {
        let a = MatrixTuple::new(vec![e12()]).unwrap();
        assert!(rotation_spot_check(&a, 200, 1).unwrap() >= -1e-9);
    }

    #[test]
    fn half_plane_rotation_stays_inside_for_small_points() {
        let a = MatrixTuple::scalars(&[ONE]);
        // |z| ≤ 1/2 lies in {Re z ≤ 1/2}, so rotating 0.45 by π stays inside
        for x in [0.45, 0.49] {
            let p = MatrixTuple::scalars(&[Complex64::from_polar(x, std::f64::consts::PI)]);
            assert!(min_eigenvalue(&a, &p).unwrap() > 0.0);
        }
    }
}
