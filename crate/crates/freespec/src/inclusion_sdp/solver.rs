//! Semidefinite feasibility by Dykstra alternating projections, followed by a
//! factored Levenberg-Marquardt refinement of the final iterate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, identity, svd_real, CMat};
use crate::tolerance::Tolerance;

type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `coeff · X_block[row, col]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearTerm {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub coeff: [f64; 2],
}

impl LinearTerm {
    pub fn new(block: usize, row: usize, col: usize, coeff: Complex64) -> Self {
        LinearTerm {
            block,
            row,
            col,
            coeff: [coeff.re, coeff.im],
        }
    }
}

/// `Σ terms = rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualityConstraint {
    pub terms: Vec<LinearTerm>,
    pub rhs: [f64; 2],
}

/// Hermitian PSD block variables subject to complex linear equalities.
/// An operator inequality `Ψ(X) ⪯ Y` is expressed by adding a slack block
/// `S` and the equalities `Ψ(X) + S = Y`; `slack_blocks` records which blocks
/// play that role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub psd_block_sizes: Vec<usize>,
    pub equality_constraints: Vec<EqualityConstraint>,
    pub slack_blocks: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub refine_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 4000,
            refine_iterations: 200,
        }
    }
}

impl SdpProblem {
    pub fn new(psd_block_sizes: Vec<usize>) -> Self {
        SdpProblem {
            psd_block_sizes,
            equality_constraints: Vec::new(),
            slack_blocks: Vec::new(),
        }
    }

    pub fn add(&mut self, terms: Vec<LinearTerm>, rhs: Complex64) {
        self.equality_constraints.push(EqualityConstraint {
            terms,
            rhs: [rhs.re, rhs.im],
        });
    }

    fn validate(&self) -> Result<()> {
        if self.psd_block_sizes.is_empty() || self.psd_block_sizes.contains(&0) {
            return Err(Error::InvalidInput(
                "SDP needs at least one non-empty PSD block".into(),
            ));
        }
        for c in &self.equality_constraints {
            if !(c.rhs[0].is_finite() && c.rhs[1].is_finite()) {
                return Err(Error::NonFinite("constraint right-hand side"));
            }
            for t in &c.terms {
                let n = *self.psd_block_sizes.get(t.block).ok_or_else(|| {
                    Error::InvalidInput(format!("constraint uses block {}", t.block))
                })?;
                if t.row >= n || t.col >= n {
                    return Err(Error::InvalidInput(
                        "constraint index outside its block".into(),
                    ));
                }
                if !(t.coeff[0].is_finite() && t.coeff[1].is_finite()) {
                    return Err(Error::NonFinite("constraint coefficient"));
                }
            }
        }
        Ok(())
    }

    /// Largest absolute residual of the equalities at `blocks`.
    pub fn equality_residual(&self, blocks: &[CMat]) -> f64 {
        self.equality_constraints
            .iter()
            .map(|c| {
                let mut acc = Complex64::new(-c.rhs[0], -c.rhs[1]);
                for t in &c.terms {
                    acc += Complex64::new(t.coeff[0], t.coeff[1]) * blocks[t.block][(t.row, t.col)];
                }
                acc.norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn rhs_norm(&self) -> f64 {
        self.equality_constraints
            .iter()
            .map(|c| c.rhs[0] * c.rhs[0] + c.rhs[1] * c.rhs[1])
            .sum::<f64>()
            .sqrt()
    }

    /// Independent check of a candidate assignment.
    pub fn verify(&self, blocks: &[CMat], tol: &Tolerance) -> Result<bool> {
        if blocks.len() != self.psd_block_sizes.len() {
            return Ok(false);
        }
        for (b, &n) in blocks.iter().zip(&self.psd_block_sizes) {
            if b.shape() != (n, n) || (b - b.adjoint()).norm() > tol.bound(b.norm()) {
                return Ok(false);
            }
            let vals = eigh(b)?.0;
            let top = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if vals[0] < -tol.bound(top) {
                return Ok(false);
            }
        }
        Ok(self.equality_residual(blocks) <= tol.abs_tol * (1.0 + self.rhs_norm()))
    }
}

/// Real coordinates of the Hermitian blocks: diagonal entries, then
/// `√2·Re`, `√2·Im` of each strictly upper entry. Isometric for Frobenius.
struct Layout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Layout {
    fn new(sizes: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut dim = 0;
        for &n in sizes {
            offsets.push(dim);
            dim += n * n;
        }
        Layout {
            sizes: sizes.to_vec(),
            offsets,
            dim,
        }
    }

    fn pair_index(n: usize, i: usize, j: usize) -> usize {
        // position of (i, j), i < j, in row-major strict upper order
        n + 2 * (i * (2 * n - i - 1) / 2 + (j - i - 1))
    }

    /// Adds `w · X[i, j]` (a complex-valued linear form) to two real rows.
    fn add_entry(
        &self,
        block: usize,
        i: usize,
        j: usize,
        w: Complex64,
        re: &mut [f64],
        im: &mut [f64],
    ) {
        let n = self.sizes[block];
        let off = self.offsets[block];
        if i == j {
            re[off + i] += w.re;
            im[off + i] += w.im;
            return;
        }
        let (p, q, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let k = off + Self::pair_index(n, p, q);
        // X[p,q] = (a + i b)/√2, X[q,p] = (a − i b)/√2
        let wa = w / SQRT2;
        let wb = w * Complex64::new(0.0, sign) / SQRT2;
        re[k] += wa.re;
        im[k] += wa.im;
        re[k + 1] += wb.re;
        im[k + 1] += wb.im;
    }

    fn to_params(&self, blocks: &[CMat]) -> RVec {
        let mut x = RVec::zeros(self.dim);
        for (b, m) in blocks.iter().enumerate() {
            let n = self.sizes[b];
            let off = self.offsets[b];
            for i in 0..n {
                x[off + i] = m[(i, i)].re;
                for j in i + 1..n {
                    let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                    let k = off + Self::pair_index(n, i, j);
                    x[k] = SQRT2 * z.re;
                    x[k + 1] = SQRT2 * z.im;
                }
            }
        }
        x
    }

    fn unpack_params(&self, x: &RVec) -> Vec<CMat> {
        self.sizes
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                let off = self.offsets[b];
                let mut m = CMat::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = Complex64::new(x[off + i], 0.0);
                    for j in i + 1..n {
                        let k = off + Self::pair_index(n, i, j);
                        let z = Complex64::new(x[k], x[k + 1]) / SQRT2;
                        m[(i, j)] = z;
                        m[(j, i)] = z.conj();
                    }
                }
                m
            })
            .collect()
    }
}

/// Equalities reduced to orthonormal rows: `Qᵀ x = c`.
struct Affine {
    qt: RMat,
    c: RVec,
    inconsistency: f64,
}

impl Affine {
    fn new(p: &SdpProblem, layout: &Layout) -> Result<Self> {
        let m = 2 * p.equality_constraints.len();
        let mut a = RMat::zeros(m.max(1), layout.dim);
        let mut b = RVec::zeros(m.max(1));
        let mut re = vec![0.0; layout.dim];
        let mut im = vec![0.0; layout.dim];
        for (k, con) in p.equality_constraints.iter().enumerate() {
            re.iter_mut().for_each(|v| *v = 0.0);
            im.iter_mut().for_each(|v| *v = 0.0);
            for t in &con.terms {
                let w = Complex64::new(t.coeff[0], t.coeff[1]);
                layout.add_entry(t.block, t.row, t.col, w, &mut re, &mut im);
            }
            for j in 0..layout.dim {
                a[(2 * k, j)] = re[j];
                a[(2 * k + 1, j)] = im[j];
            }
            b[2 * k] = con.rhs[0];
            b[2 * k + 1] = con.rhs[1];
        }
        // aᵀ = U Σ Vᵀ, so a = V Σ Uᵀ and {a x = b} = {Uᵣᵀ x = Σᵣ⁻¹ Vᵣᵀ b}.
        let (u, s, v) = svd_real(&a.transpose())?;
        let vt = v.transpose();
        let smax = s.iter().fold(0.0_f64, |acc, v| acc.max(*v));
        let keep: Vec<usize> = (0..s.len())
            .filter(|&k| s[k] > 1e-12 * smax.max(1e-300))
            .collect();
        let r = keep.len();
        let mut qt = RMat::zeros(r, layout.dim);
        let mut c = RVec::zeros(r);
        let mut explained = RVec::zeros(b.len());
        for (row, &k) in keep.iter().enumerate() {
            qt.set_row(row, &u.column(k).transpose());
            let vk = vt.row(k).transpose();
            let coef = vk.dot(&b);
            c[row] = coef / s[k];
            explained += vk * coef;
        }
        let inconsistency = (&b - explained).norm();
        Ok(Affine {
            qt,
            c,
            inconsistency,
        })
    }

    fn project(&self, x: &RVec) -> RVec {
        if self.qt.nrows() == 0 {
            return x.clone();
        }
        let r = &self.qt * x - &self.c;
        x - self.qt.transpose() * r
    }
}

fn project_psd(layout: &Layout, x: &RVec) -> Result<RVec> {
    let blocks = layout.unpack_params(x);
    let mut out = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let (vals, vecs) = eigh(b)?;
        let mut scaled = vecs.clone();
        for (k, &l) in vals.iter().enumerate() {
            scaled.column_mut(k).scale_mut(l.max(0.0));
        }
        out.push(scaled * vecs.adjoint());
    }
    Ok(layout.to_params(&out))
}

/// Outcome of the projection phase.
struct Projection {
    point: RVec,
    gap: f64,
    stalled: bool,
}

fn dykstra(
    layout: &Layout,
    affine: &Affine,
    max_iterations: usize,
    scale: f64,
) -> Result<Projection> {
    let mut x = project_psd(layout, &affine.project(&RVec::zeros(layout.dim)))?;
    let mut corr = RVec::zeros(layout.dim);
    let mut gap = f64::INFINITY;
    let mut history: Vec<f64> = Vec::new();
    for it in 0..max_iterations {
        let y = affine.project(&x);
        let z = project_psd(layout, &(&y + &corr))?;
        corr = &y + &corr - &z;
        gap = (&y - &z).norm();
        x = z;
        if gap <= 1e-11 * scale {
            break;
        }
        if it % 100 == 0 {
            history.push(gap);
            let h = history.len();
            if h >= 4 {
                let old = history[h - 4];
                if gap > 1e-5 * scale && gap > 0.995 * old {
                    return Ok(Projection {
                        point: x,
                        gap,
                        stalled: true,
                    });
                }
            }
        }
    }
    Ok(Projection {
        point: x,
        gap,
        stalled: false,
    })
}

/// Levenberg-Marquardt on `X_k = R_k R_k*` for `Qᵀ x(R) = c`.
fn refine(
    layout: &Layout,
    affine: &Affine,
    start: &[CMat],
    iterations: usize,
    target: f64,
) -> Result<Option<Vec<CMat>>> {
    let r = affine.qt.nrows();
    let mut factors: Vec<CMat> = Vec::with_capacity(start.len());
    for m in start {
        let n = m.nrows();
        let shift = 1e-6 * m.norm().max(1e-3);
        let (vals, vecs) = eigh(&(m + identity(n) * Complex64::new(shift, 0.0)))?;
        let mut f = vecs.clone();
        for (k, &l) in vals.iter().enumerate() {
            f.column_mut(k).scale_mut(l.max(0.0).sqrt());
        }
        factors.push(f);
    }
    let gram = |fs: &[CMat]| -> Vec<CMat> { fs.iter().map(|f| f * f.adjoint()).collect() };
    let residual = |fs: &[CMat]| -> RVec { &affine.qt * layout.to_params(&gram(fs)) - &affine.c };
    if r == 0 {
        return Ok(Some(gram(&factors)));
    }
    let nparams: usize = layout.sizes.iter().map(|n| 2 * n * n).sum();
    let mut res = residual(&factors);
    let mut mu = 1e-3 * res.norm().max(1e-12);
    for _ in 0..iterations {
        if res.norm() <= target {
            return Ok(Some(gram(&factors)));
        }
        // Jacobian columns: d x = h(E R* + R E*) for E = ξ e_a e_bᵀ.
        let mut jac = RMat::zeros(r, nparams);
        let mut col = 0;
        for (blk, f) in factors.iter().enumerate() {
            let n = layout.sizes[blk];
            let off = layout.offsets[blk];
            for a in 0..n {
                for bcol in 0..n {
                    for xi in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                        // row a of dX is ξ·conj(R[:, b])ᵀ plus its adjoint
                        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
                        let diag = 2.0 * (xi * f[(a, bcol)].conj()).re;
                        entries.push((off + a, diag));
                        for j in 0..n {
                            if j == a {
                                continue;
                            }
                            let z = if a < j {
                                xi * f[(j, bcol)].conj()
                            } else {
                                xi.conj() * f[(j, bcol)]
                            };
                            let (p, q) = if a < j { (a, j) } else { (j, a) };
                            let k = off + Layout::pair_index(n, p, q);
                            entries.push((k, SQRT2 * z.re));
                            entries.push((k + 1, SQRT2 * z.im));
                        }
                        let mut jc = jac.column_mut(col);
                        for (k, v) in entries {
                            if v != 0.0 {
                                jc.axpy(v, &affine.qt.column(k), 1.0);
                            }
                        }
                        col += 1;
                    }
                }
            }
        }
        let jjt = &jac * jac.transpose();
        let mut improved = false;
        for _ in 0..12 {
            let mut sys = jjt.clone();
            for k in 0..r {
                sys[(k, k)] += mu;
            }
            let Some(chol) = sys.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let y = chol.solve(&(-&res));
            let delta = jac.transpose() * y;
            let mut trial = factors.clone();
            let mut idx = 0;
            for (blk, f) in trial.iter_mut().enumerate() {
                let n = layout.sizes[blk];
                for a in 0..n {
                    for bcol in 0..n {
                        f[(a, bcol)] += Complex64::new(delta[idx], delta[idx + 1]);
                        idx += 2;
                    }
                }
            }
            let trial_res = residual(&trial);
            if trial_res.norm() < res.norm() {
                factors = trial;
                res = trial_res;
                mu = (mu / 5.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 8.0;
        }
        if !improved {
            break;
        }
    }
    if res.norm() <= target {
        Ok(Some(gram(&factors)))
    } else {
        Ok(None)
    }
}

/// Finds PSD blocks satisfying the equalities, or `None` when the problem is
/// infeasible at tolerance. The returned assignment has passed
/// [`SdpProblem::verify`].
pub fn solve_feasibility(p: &SdpProblem, tol: &Tolerance) -> Result<Option<Vec<CMat>>> {
    solve_feasibility_with(p, tol, &SolverOptions::default())
}

pub fn solve_feasibility_with(
    p: &SdpProblem,
    tol: &Tolerance,
    options: &SolverOptions,
) -> Result<Option<Vec<CMat>>> {
    p.validate()?;
    let layout = Layout::new(&p.psd_block_sizes);
    let affine = Affine::new(p, &layout)?;
    let scale = 1.0 + p.rhs_norm();
    if affine.inconsistency > tol.abs_tol * scale {
        return Ok(None);
    }
    let proj = dykstra(&layout, &affine, options.max_iterations, scale)?;
    let start = layout.unpack_params(&proj.point);
    let target = 1e-3 * tol.abs_tol * scale;
    if let Some(sol) = refine(&layout, &affine, &start, options.refine_iterations, target)? {
        if p.verify(&sol, tol)? {
            return Ok(Some(sol));
        }
    }
    if proj.stalled || proj.gap > 1e-3 * scale {
        return Ok(None);
    }
    Err(Error::IterationLimit(options.max_iterations))
}
