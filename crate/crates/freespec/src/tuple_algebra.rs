//! Reducing subspaces, irreducible block decompositions, unitary equivalence
//! and minimal defining tuples.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inclusion_sdp::{choi_of_map, includes_with, InclusionOptions, InclusionStatus};
use crate::io;
use crate::linalg::{
    c, complex_gaussian, eigh, identity, kron, null_space, polar_unitary, select_columns, CMat,
};
use crate::rng::{derive, seeded};
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;

const SPLIT_RETRIES: usize = 8;
const WORD_BUDGET: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    #[serde(with = "io::cmat")]
    pub change_of_basis: CMat,
    pub blocks: Vec<MatrixTuple>,
    pub block_sizes: Vec<usize>,
}

impl BlockDecomposition {
    /// `‖U* A U − ⊕ blocks‖_F`.
    pub fn reconstruction_error(&self, a: &MatrixTuple) -> f64 {
        let conj = a.conjugate(&self.change_of_basis);
        match MatrixTuple::direct_sum_all(&self.blocks) {
            Ok(sum) => conj.distance(&sum),
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WitnessReason {
    /// Unitarily equivalent to an earlier retained block.
    Duplicate { of: usize },
    /// Spectrahedron contains that of the retained blocks listed.
    Dominated { by: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionWitness {
    pub block: usize,
    pub reason: WitnessReason,
    /// Choi matrix of the completely positive map carrying the retained
    /// coefficients onto the dropped block's coefficients.
    #[serde(with = "io::cmat")]
    pub choi: CMat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityCertificate {
    pub minimal_tuple: MatrixTuple,
    pub decomposition: BlockDecomposition,
    pub retained_block_indices: Vec<usize>,
    pub dropped_block_indices: Vec<usize>,
    pub inclusion_witnesses: Vec<InclusionWitness>,
    /// Some block was kept only because a test could not decide.
    pub indeterminate: bool,
    pub notes: Vec<String>,
}

impl MinimalityCertificate {
    pub fn retained_blocks(&self) -> Vec<MatrixTuple> {
        self.retained_block_indices
            .iter()
            .map(|&i| self.decomposition.blocks[i].clone())
            .collect()
    }
}

fn stack_rows(parts: &[CMat]) -> CMat {
    let cols = parts[0].ncols();
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        out.view_mut((r, 0), p.shape()).copy_from(p);
        r += p.nrows();
    }
    out
}

fn unvec(v: &[Complex64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v)
}

/// Frobenius-orthonormal basis of `{C : C A_s = A_s C, C A_s* = A_s* C}`.
pub fn commutant_basis(a: &MatrixTuple) -> Result<Vec<CMat>> {
    commutant_basis_with(a, &Tolerance::default())
}

pub fn commutant_basis_with(a: &MatrixTuple, tol: &Tolerance) -> Result<Vec<CMat>> {
    intertwiner_basis(a, a, tol)
}

/// Basis of `{W : A_s W = W B_s, A_s* W = W B_s*}` (`W` is `d_A x d_B`).
fn intertwiner_basis(a: &MatrixTuple, b: &MatrixTuple, tol: &Tolerance) -> Result<Vec<CMat>> {
    let (da, db) = (a.d(), b.d());
    let mut parts = Vec::with_capacity(2 * a.g());
    for (x, y) in a.mats().iter().zip(b.mats()) {
        // vec(W y − x W) = (yᵀ ⊗ I_da − I_db ⊗ x) vec(W)
        parts.push(kron(&y.transpose(), &identity(da)) - kron(&identity(db), x));
        let (xa, ya) = (x.adjoint(), y.adjoint());
        parts.push(kron(&ya.transpose(), &identity(da)) - kron(&identity(db), &xa));
    }
    let m = stack_rows(&parts);
    let threshold = tol.bound(a.norm() + b.norm());
    let ns = null_space(&m, threshold)?;
    Ok((0..ns.ncols())
        .map(|k| unvec(ns.column(k).as_slice(), da, db))
        .collect())
}

fn split_recursive<R: Rng>(
    a: &MatrixTuple,
    tol: &Tolerance,
    rng: &mut R,
) -> Result<Vec<(CMat, MatrixTuple)>> {
    let d = a.d();
    let basis = commutant_basis_with(a, tol)?;
    if basis.len() <= 1 {
        return Ok(vec![(identity(d), a.clone())]);
    }
    for _ in 0..SPLIT_RETRIES {
        let mut h = CMat::zeros(d, d);
        for cb in &basis {
            let herm = (cb + cb.adjoint()).scale(0.5);
            let skew = (cb - cb.adjoint()) * c(0.0, -0.5);
            let r1: f64 = rng.random_range(-1.0..1.0);
            let r2: f64 = rng.random_range(-1.0..1.0);
            h += herm.scale(r1) + skew.scale(r2);
        }
        let (vals, vecs) = eigh(&h)?;
        let hn = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if hn == 0.0 {
            continue;
        }
        let merge = 100.0 * tol.abs_tol * hn;
        let mut ambiguous = false;
        let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
        for k in 1..d {
            let gap = vals[k] - vals[k - 1];
            if gap < merge {
                clusters.last_mut().unwrap().push(k);
            } else {
                if gap < 1e3 * merge {
                    ambiguous = true;
                }
                clusters.push(vec![k]);
            }
        }
        if ambiguous || clusters.len() < 2 {
            continue;
        }
        let mut out = Vec::new();
        for cl in clusters {
            let v = select_columns(&vecs, &cl);
            let sub = a.compress(&v, &v);
            for (w, blk) in split_recursive(&sub, tol, rng)? {
                out.push((&v * w, blk));
            }
        }
        return Ok(out);
    }
    Err(Error::DegenerateSplit(SPLIT_RETRIES))
}

/// Splits `A` into irreducible blocks along eigenspaces of random Hermitian
/// commutant elements. Deterministic for a fixed `seed`.
pub fn irreducible_blocks(
    a: &MatrixTuple,
    tol: &Tolerance,
    seed: u64,
) -> Result<BlockDecomposition> {
    if !a.is_square() {
        return Err(Error::InvalidInput(
            "block decomposition needs square matrices".into(),
        ));
    }
    let mut rng = seeded(seed);
    let parts = split_recursive(a, tol, &mut rng)?;
    let d = a.d();
    let mut u = CMat::zeros(d, d);
    let mut col = 0;
    let mut blocks = Vec::with_capacity(parts.len());
    let mut block_sizes = Vec::with_capacity(parts.len());
    for (v, blk) in parts {
        u.view_mut((0, col), v.shape()).copy_from(&v);
        col += v.ncols();
        block_sizes.push(blk.d());
        blocks.push(blk);
    }
    Ok(BlockDecomposition {
        change_of_basis: u,
        blocks,
        block_sizes,
    })
}

/// Traces of all words in `(A, A*)` up to the screening length, in a fixed order.
fn word_traces(a: &MatrixTuple, max_len: usize) -> Vec<(Complex64, f64)> {
    let letters: Vec<CMat> = a
        .mats()
        .iter()
        .flat_map(|m| [m.clone(), m.adjoint()])
        .collect();
    let mut out = Vec::new();
    let mut layer: Vec<CMat> = vec![identity(a.d())];
    for _ in 0..max_len {
        if out.len() + layer.len() * letters.len() > WORD_BUDGET {
            break;
        }
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for l in &letters {
                let p = w * l;
                out.push((p.trace(), p.norm()));
                next.push(p);
            }
        }
        layer = next;
    }
    out
}

/// Screening length: `2 d²`, truncated by the word budget.
pub fn word_length_bound(d: usize) -> usize {
    2 * d * d
}

/// A unitary `W` with `W* A_s W = B_s` for all `s`, if one exists.
pub fn unitarily_equivalent(
    a: &MatrixTuple,
    b: &MatrixTuple,
    tol: &Tolerance,
) -> Result<Option<CMat>> {
    if a.g() != b.g() {
        return Err(Error::DimensionMismatch(
            "tuples have different variable counts".into(),
        ));
    }
    if a.d() != b.d() || !a.is_square() || !b.is_square() {
        return Ok(None);
    }
    let d = a.d();
    let len = word_length_bound(d);
    let ta = word_traces(a, len);
    let tb = word_traces(b, len);
    let sd = (d as f64).sqrt();
    for ((x, nx), (y, ny)) in ta.iter().zip(&tb) {
        if (x - y).norm() > tol.bound(sd * nx.max(*ny)) {
            return Ok(None);
        }
    }
    let basis = intertwiner_basis(a, b, tol)?;
    if basis.is_empty() {
        return Err(Error::Indeterminate(
            "word traces agree but no intertwiner was found".into(),
        ));
    }
    let mut rng = derive(0x5eed, d as u64);
    let scale = a.norm().max(b.norm());
    for _ in 0..4 {
        let coeffs = complex_gaussian(&mut rng, basis.len(), 1);
        let mut w = CMat::zeros(d, d);
        for (k, bk) in basis.iter().enumerate() {
            w += bk * coeffs[k];
        }
        let u = polar_unitary(&w)?;
        if a.conjugate(&u).distance(b) <= tol.bound(scale) {
            return Ok(Some(u));
        }
    }
    Err(Error::Indeterminate(
        "intertwiner space found but no unitary intertwiner verified".into(),
    ))
}

/// Choi matrix of `X ↦ W* X W` on `d x d` matrices.
fn conjugation_choi(w: &CMat) -> CMat {
    choi_of_map(w.nrows(), |x| w.adjoint() * x * w)
}

/// Minimal defining tuple: irreducible blocks, duplicates removed, then
/// blocks whose spectrahedron contains that of the others dropped greedily
/// (largest first).
pub fn minimize_pencil(a: &MatrixTuple, tol: &Tolerance) -> Result<MinimalityCertificate> {
    minimize_pencil_seeded(a, tol, 0)
}

pub fn minimize_pencil_seeded(
    a: &MatrixTuple,
    tol: &Tolerance,
    seed: u64,
) -> Result<MinimalityCertificate> {
    let decomposition = irreducible_blocks(a, tol, seed)?;
    let blocks = &decomposition.blocks;
    let mut notes = Vec::new();
    let mut indeterminate = false;
    let mut witnesses = Vec::new();
    let mut retained: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();

    for (i, blk) in blocks.iter().enumerate() {
        let mut duplicate = None;
        for &j in &retained {
            if blocks[j].d() != blk.d() {
                continue;
            }
            match unitarily_equivalent(&blocks[j], blk, tol) {
                Ok(Some(w)) => {
                    duplicate = Some((j, w));
                    break;
                }
                Ok(None) => {}
                Err(Error::Indeterminate(msg)) => {
                    notes.push(format!(
                        "equivalence of blocks {j} and {i} undecided: {msg}"
                    ));
                }
                Err(e) => return Err(e),
            }
        }
        match duplicate {
            Some((j, w)) => {
                dropped.push(i);
                witnesses.push(InclusionWitness {
                    block: i,
                    reason: WitnessReason::Duplicate { of: j },
                    choi: conjugation_choi(&w),
                });
            }
            None => retained.push(i),
        }
    }

    let mut order = retained.clone();
    order.sort_by_key(|&i| std::cmp::Reverse(blocks[i].d()));
    let options = InclusionOptions {
        seed,
        ..InclusionOptions::default()
    };
    for i in order {
        let others: Vec<usize> = retained.iter().copied().filter(|&j| j != i).collect();
        if others.is_empty() {
            continue;
        }
        let parts: Vec<MatrixTuple> = others.iter().map(|&j| blocks[j].clone()).collect();
        let dom = MatrixTuple::direct_sum_all(&parts)?;
        let verdict = includes_with(&dom, &blocks[i], tol, &options)?;
        match verdict.status {
            InclusionStatus::Included => {
                retained.retain(|&j| j != i);
                dropped.push(i);
                witnesses.push(InclusionWitness {
                    block: i,
                    reason: WitnessReason::Dominated { by: others },
                    choi: verdict
                        .choi_witness
                        .expect("included verdict carries a witness"),
                });
            }
            InclusionStatus::NotIncluded => {}
            InclusionStatus::Indeterminate => {
                indeterminate = true;
                notes.push(format!("block {i} kept: inclusion undecided"));
            }
        }
    }
    retained.sort_unstable();
    dropped.sort_unstable();
    let kept: Vec<MatrixTuple> = retained.iter().map(|&i| blocks[i].clone()).collect();
    let minimal_tuple = MatrixTuple::direct_sum_all(&kept)?;
    Ok(MinimalityCertificate {
        minimal_tuple,
        decomposition,
        retained_block_indices: retained,
        dropped_block_indices: dropped,
        inclusion_witnesses: witnesses,
        indeterminate,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, ONE, ZERO};
    use crate::pencil_core::membership;

    fn e12() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }

    fn generic(seed: u64, g: usize, d: usize) -> MatrixTuple {
        let mut rng = seeded(seed);
        MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, d, d)).collect()).unwrap()
    }

    fn bidisk() -> MatrixTuple {
        let z = CMat::zeros(2, 2);
        MatrixTuple::new(vec![
            crate::linalg::block_diag(&[e12(), z.clone()]),
            crate::linalg::block_diag(&[z, e12()]),
        ])
        .unwrap()
    }

    #[test]
    fn commutant_of_single_nilpotent_is_scalars() {
        let a = MatrixTuple::new(vec![e12()]).unwrap();
        let basis = commutant_basis(&a).unwrap();
        assert_eq!(basis.len(), 1);
        // the only unit-norm scalar is I/√2 up to phase
        let b = &basis[0];
        let ph = b[(0, 0)] / b[(0, 0)].norm();
        let expected = identity(2) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        assert!((b / ph - expected).norm() < 1e-12);
    }

    #[test]
    fn commutant_dimensions() {
        assert_eq!(commutant_basis(&MatrixTuple::zeros(2, 3)).unwrap().len(), 9);
        let a = MatrixTuple::new(vec![crate::linalg::block_diag(&[e12(), e12()])]).unwrap();
        let basis = commutant_basis(&a).unwrap();
        assert_eq!(basis.len(), 4);
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                let ip = (x.adjoint() * y).trace();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(target, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn irreducible_tuple_is_one_block() {
        let a = generic(3, 2, 3);
        let dec = irreducible_blocks(&a, &Tolerance::default(), 1).unwrap();
        assert_eq!(dec.block_sizes, vec![3]);
        assert!(dec.reconstruction_error(&a) < 1e-10);
    }

    #[test]
    fn planted_direct_sum_recovers_sizes() {
        let a = generic(4, 2, 2);
        let b = generic(5, 2, 3);
        let sum = a.direct_sum(&b).unwrap();
        let u = haar_unitary(&mut seeded(9), 5);
        let conj = sum.conjugate(&u);
        let dec = irreducible_blocks(&conj, &Tolerance::default(), 2).unwrap();
        let mut sizes = dec.block_sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
        assert!(dec.reconstruction_error(&conj) < 1e-9);
        let uu = dec.change_of_basis.adjoint() * &dec.change_of_basis;
        assert!((uu - identity(5)).norm() < 1e-10);
    }

    #[test]
    fn bidisk_has_two_blocks() {
        let dec = irreducible_blocks(&bidisk(), &Tolerance::default(), 0).unwrap();
        assert_eq!(dec.block_sizes, vec![2, 2]);
    }

    #[test]
    fn equivalence_examples() {
        let tol = Tolerance::default();
        let a = generic(6, 2, 3);
        let w = unitarily_equivalent(&a, &a, &tol).unwrap().unwrap();
        assert!(a.conjugate(&w).distance(&a) < 1e-9);

        let u = haar_unitary(&mut seeded(7), 3);
        let b = a.conjugate(&u);
        let w = unitarily_equivalent(&a, &b, &tol).unwrap().unwrap();
        assert!(a.conjugate(&w).distance(&b) < 1e-9);
        assert!(unitarily_equivalent(&b, &a, &tol).unwrap().is_some());

        let x = MatrixTuple::new(vec![e12()]).unwrap();
        let y = x.scale(c(2.0, 0.0));
        assert!(unitarily_equivalent(&x, &y, &tol).unwrap().is_none());
    }

    #[test]
    fn minimize_duplicate_and_dominated() {
        let tol = Tolerance::default();
        let a = generic(8, 2, 2);
        let cert = minimize_pencil(&a.direct_sum(&a).unwrap(), &tol).unwrap();
        assert_eq!(cert.minimal_tuple.d(), 2);
        assert!(unitarily_equivalent(&cert.minimal_tuple, &a, &tol)
            .unwrap()
            .is_some());

        let cert = minimize_pencil(&a, &tol).unwrap();
        assert!(cert.dropped_block_indices.is_empty());

        let ball = MatrixTuple::new(vec![e12()]).unwrap();
        let half = ball.scale(c(0.5, 0.0));
        let sum = ball.direct_sum(&half).unwrap();
        let cert = minimize_pencil(&sum, &tol).unwrap();
        assert_eq!(cert.minimal_tuple.d(), 2);
        assert!(!cert.indeterminate);
        assert!(unitarily_equivalent(&cert.minimal_tuple, &ball, &tol)
            .unwrap()
            .is_some());
        let p = MatrixTuple::scalars(&[c(0.9, 0.3)]);
        assert_eq!(
            membership(&cert.minimal_tuple, &p, &tol).unwrap().member,
            membership(&sum, &p, &tol).unwrap().member
        );
    }
}
