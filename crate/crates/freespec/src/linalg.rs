//! Dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let h = hermitian_part(m);
    let cap = 10_000 + 200 * n * n;
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, cap).ok_or(Error::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    Ok(eigh(m)?.0)
}

pub fn min_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(eigvalsh(m)?.first().copied().unwrap_or(f64::INFINITY))
}

pub fn max_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(eigvalsh(m)?.last().copied().unwrap_or(f64::NEG_INFINITY))
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(svd(m)?.1)
}

pub fn spectral_norm(m: &CMat) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Full SVD `m = U diag(s) V*` with singular values sorted descending.
/// `U` is `rows x k`, `V` is `cols x k`, `k = min(rows, cols)`.
///
/// One-sided Jacobi: nalgebra's complex SVD returns inconsistent factors on
/// some rank-deficient inputs, which the rank decisions here cannot tolerate.
pub fn svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (r, cl) = m.shape();
    if !is_finite(m) {
        return Err(Error::SvdFailure(r, cl));
    }
    if r < cl {
        let (u, s, v) = svd(&m.adjoint())?;
        return Ok((v, s, u));
    }
    let k = cl;
    let mut a = m.clone();
    let mut v = identity(k);
    let mut converged = k < 2;
    for _ in 0..80 {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= 2.0 * f64::EPSILON * (k as f64) * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                if t == 0.0 || !t.is_finite() {
                    continue;
                }
                rotated = true;
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut a, p, q, cs, sn, phase);
                rotate_columns(&mut v, p, q, cs, sn, phase);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::SvdFailure(r, cl));
    }
    let norms: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut us = CMat::zeros(r, k);
    let mut vs = CMat::zeros(cl, k);
    let mut s = Vec::with_capacity(k);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        vs.set_column(dst, &v.column(src));
        s.push(norms[src]);
        // Tiny columns carry little direction information; keep U unitary.
        let mut w: CVec = if norms[src] > 0.0 {
            a.column(src).unscale(norms[src])
        } else {
            CVec::zeros(r)
        };
        for _ in 0..2 {
            for j in 0..dst {
                if missing.contains(&j) {
                    continue;
                }
                let proj = us.column(j).dotc(&w);
                w -= us.column(j) * proj;
            }
        }
        let left = w.norm();
        if left > 0.5 {
            us.set_column(dst, &w.unscale(left));
        } else {
            missing.push(dst);
        }
    }
    fill_orthonormal(&mut us, &missing);
    Ok((us, s, vs))
}

/// SVD of a real matrix; the Jacobi sweep keeps real input real.
pub fn svd_real(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (u, s, v) = svd(&m.map(|x| c(x, 0.0)))?;
    Ok((u.map(|z| z.re), s, v.map(|z| z.re)))
}

/// Minimum-norm least-squares solution, dropping singular values below
/// `rcond` times the largest.
pub fn lstsq_real(m: &DMatrix<f64>, rhs: &DVector<f64>, rcond: f64) -> Result<DVector<f64>> {
    let (u, s, v) = svd_real(m)?;
    let top = s.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(m.ncols());
    for (k, &sk) in s.iter().enumerate() {
        if sk > rcond * top && sk > 0.0 {
            x += v.column(k) * (u.column(k).dot(rhs) / sk);
        }
    }
    Ok(x)
}

/// Applies the phase-aligned Jacobi rotation to columns `p`, `q`.
fn rotate_columns(m: &mut CMat, p: usize, q: usize, cs: f64, sn: f64, phase: Complex64) {
    let conj = phase.conj();
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)] * conj;
        m[(i, p)] = x * cs - y * sn;
        m[(i, q)] = x * sn + y * cs;
    }
}

/// Replaces the listed columns by unit vectors orthogonal to all others.
fn fill_orthonormal(u: &mut CMat, slots: &[usize]) {
    let n = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !slots.contains(j)).collect();
    let mut candidate = 0;
    for &slot in slots {
        while candidate < n {
            let mut w = CVec::zeros(n);
            w[candidate] = ONE;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let proj = u.column(j).dotc(&w);
                    w -= u.column(j) * proj;
                }
            }
            let norm = w.norm();
            if norm > 0.5 {
                u.set_column(slot, &w.unscale(norm));
                filled.push(slot);
                break;
            }
        }
    }
}

/// Orthonormal basis of the null space of `m`, using singular values below
/// `threshold`. Works for any shape (pads wide matrices with zero rows).
pub fn null_space(m: &CMat, threshold: f64) -> Result<CMat> {
    let (r, cl) = m.shape();
    let tall = if r < cl {
        let mut t = CMat::zeros(cl, cl);
        t.view_mut((0, 0), (r, cl)).copy_from(m);
        t
    } else {
        m.clone()
    };
    let (_, s, v) = svd(&tall)?;
    let keep: Vec<usize> = (0..cl).filter(|&k| s[k] <= threshold).collect();
    Ok(select_columns(&v, &keep))
}

/// Orthonormal basis for the column space of `m` together with the sorted
/// singular values that decided it.
pub fn column_space(m: &CMat, threshold: f64) -> Result<(CMat, Vec<f64>)> {
    let (u, s, _) = svd(m)?;
    let rank = s.iter().filter(|&&x| x > threshold).count();
    Ok((u.columns(0, rank).into_owned(), s))
}

/// Extends the orthonormal columns of `q` (`n x k`) to a unitary `n x n`.
pub fn complete_basis(q: &CMat) -> Result<CMat> {
    let n = q.nrows();
    let k = q.ncols();
    if k == n {
        return Ok(q.clone());
    }
    let proj = identity(n) - q * q.adjoint();
    let (u, _, _) = svd(&proj)?;
    let mut out = CMat::zeros(n, n);
    out.view_mut((0, 0), (n, k)).copy_from(q);
    out.view_mut((0, k), (n, n - k))
        .copy_from(&u.columns(0, n - k));
    Ok(out)
}

pub fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    let (u, _, v) = svd(m)?;
    Ok(u * v.adjoint())
}

/// `f` applied to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let fl = f(l);
        scaled.column_mut(k).scale_mut(fl);
    }
    Ok(scaled * vecs.adjoint())
}

pub fn psd_sqrt(m: &CMat) -> Result<CMat> {
    hermitian_function(m, |l| l.max(0.0).sqrt())
}

/// `exp(i t K)` for Hermitian `K`.
pub fn unitary_exp(k: &CMat, t: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(k)?;
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, t * l);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    Ok(scaled * vecs.adjoint())
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cl: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(r, cl);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Standard complex Gaussian matrix (independent real and imaginary parts of variance 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    hermitian_part(&complex_gaussian(rng, n, n))
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let z = complex_gaussian(rng, n, n);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for z in q.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    q
}

pub fn unit_vector(v: &CVec) -> CVec {
    let n = v.norm();
    if n > 0.0 {
        v / Complex64::from(n)
    } else {
        v.clone()
    }
}
