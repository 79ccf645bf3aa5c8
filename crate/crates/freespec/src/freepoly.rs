//! Free matrix polynomials `p(x) = Σ_w B_w ⊗ w(x)` in `g` letters and their
//! adjoints, with the coordinate-unitary invariance test.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, matrix_from_repr, matrix_to_repr, MatrixRepr};
use crate::linalg::{
    block_diag, column_space, complete_basis, complex_gaussian, haar_unitary, identity, is_finite,
    kron, singular_values, CMat,
};
use crate::rng::{derive, seeded};
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;

pub const MAX_DEGREE: usize = 8;
pub const MAX_TERMS: usize = 10_000;

/// `x_var` or `x_var*`; `var` counts from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub var: usize,
    #[serde(rename = "star")]
    pub starred: bool,
}

impl Letter {
    pub fn x(var: usize) -> Self {
        Letter {
            var,
            starred: false,
        }
    }

    pub fn star(var: usize) -> Self {
        Letter { var, starred: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn new(letters: Vec<Letter>) -> Self {
        Word { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Reversed with every star toggled.
    pub fn adjoint(&self) -> Self {
        Word {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| Letter {
                    var: l.var,
                    starred: !l.starred,
                })
                .collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { letters }
    }

    /// Adjacent letters in different variables.
    pub fn is_cross_term(&self) -> bool {
        self.letters.windows(2).any(|w| w[0].var != w[1].var)
    }

    /// The single variable of a non-empty word without cross terms.
    pub fn variable(&self) -> Option<usize> {
        let first = self.letters.first()?.var;
        self.letters.iter().all(|l| l.var == first).then_some(first)
    }

    pub fn eval(&self, x: &MatrixTuple) -> CMat {
        let n = x.rows();
        let mut out = identity(n);
        for l in &self.letters {
            let m = x.get(l.var - 1);
            out = if l.starred {
                out * m.adjoint()
            } else {
                out * m
            };
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| format!("x{}{}", l.var, if l.starred { "*" } else { "" }))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct FreeMatrixPolynomial {
    rows: usize,
    cols: usize,
    g: usize,
    terms: BTreeMap<Word, CMat>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    word: Word,
    coeff: MatrixRepr,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    rows: usize,
    cols: usize,
    g: usize,
    terms: Vec<TermRepr>,
}

impl TryFrom<PolyRepr> for FreeMatrixPolynomial {
    type Error = String;

    fn try_from(r: PolyRepr) -> std::result::Result<Self, String> {
        let mut p = FreeMatrixPolynomial::zero(r.rows, r.cols, r.g).map_err(|e| e.to_string())?;
        for (k, t) in r.terms.into_iter().enumerate() {
            let m = matrix_from_repr(&t.coeff).map_err(|e| format!("term {k}: {e}"))?;
            p.add_term(t.word, m)
                .map_err(|e| format!("term {k}: {e}"))?;
        }
        Ok(p)
    }
}

impl From<FreeMatrixPolynomial> for PolyRepr {
    fn from(p: FreeMatrixPolynomial) -> Self {
        PolyRepr {
            rows: p.rows,
            cols: p.cols,
            g: p.g,
            terms: p
                .terms
                .iter()
                .map(|(w, m)| TermRepr {
                    word: w.clone(),
                    coeff: matrix_to_repr(m),
                })
                .collect(),
        }
    }
}

impl FreeMatrixPolynomial {
    pub fn zero(rows: usize, cols: usize, g: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || g == 0 {
            return Err(Error::InvalidInput(
                "polynomial shape and g must be positive".into(),
            ));
        }
        Ok(FreeMatrixPolynomial {
            rows,
            cols,
            g,
            terms: BTreeMap::new(),
        })
    }

    /// `I_d` as a polynomial in `g` variables.
    pub fn identity(d: usize, g: usize) -> Result<Self> {
        let mut p = Self::zero(d, d, g)?;
        p.add_term(Word::empty(), identity(d))?;
        Ok(p)
    }

    pub fn monomial(g: usize, word: Word, coeff: CMat) -> Result<Self> {
        let mut p = Self::zero(coeff.nrows(), coeff.ncols(), g)?;
        p.add_term(word, coeff)?;
        Ok(p)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn terms(&self) -> &BTreeMap<Word, CMat> {
        &self.terms
    }

    pub fn coefficient(&self, w: &Word) -> Option<&CMat> {
        self.terms.get(w)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    /// Adds `coeff · w`, merging with an existing term; exact zeros are dropped.
    pub fn add_term(&mut self, w: Word, coeff: CMat) -> Result<()> {
        if coeff.shape() != (self.rows, self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient {}x{} in a {}x{} polynomial",
                coeff.nrows(),
                coeff.ncols(),
                self.rows,
                self.cols
            )));
        }
        if !is_finite(&coeff) {
            return Err(Error::NonFinite("polynomial coefficient"));
        }
        if let Some(l) = w.letters.iter().find(|l| l.var == 0 || l.var > self.g) {
            return Err(Error::InvalidInput(format!(
                "letter x{} outside 1..={}",
                l.var, self.g
            )));
        }
        if w.len() > MAX_DEGREE {
            return Err(Error::TooLarge(format!(
                "degree {} exceeds {MAX_DEGREE}",
                w.len()
            )));
        }
        let zero = Complex64::new(0.0, 0.0);
        if let Some(existing) = self.terms.get_mut(&w) {
            *existing += coeff;
            if existing.iter().all(|z| *z == zero) {
                self.terms.remove(&w);
            }
        } else if coeff.iter().any(|z| *z != zero) {
            if self.terms.len() >= MAX_TERMS {
                return Err(Error::TooLarge(format!("more than {MAX_TERMS} terms")));
            }
            self.terms.insert(w, coeff);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (w, m) in &other.terms {
            out.add_term(w.clone(), m.clone())?;
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        FreeMatrixPolynomial {
            rows: self.cols,
            cols: self.rows,
            g: self.g,
            terms: self
                .terms
                .iter()
                .map(|(w, m)| (w.adjoint(), m.adjoint()))
                .collect(),
        }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.g != other.g || self.cols != other.rows {
            return Err(Error::DimensionMismatch(
                "polynomial product shapes disagree".into(),
            ));
        }
        let mut out = Self::zero(self.rows, other.cols, self.g)?;
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.concat(v), a * b)?;
            }
        }
        Ok(out)
    }

    /// `(V* B_w W)_w`.
    pub fn compress(&self, v: &CMat, w: &CMat) -> Result<Self> {
        let mut out = Self::zero(v.ncols(), w.ncols(), self.g)?;
        let va = v.adjoint();
        for (word, m) in &self.terms {
            out.add_term(word.clone(), &va * m * w)?;
        }
        Ok(out)
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols, self.g) != (other.rows, other.cols, other.g) {
            return Err(Error::DimensionMismatch(
                "polynomials live in different spaces".into(),
            ));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.terms
            .values()
            .map(|m| m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// `Σ_w B_w ⊗ w(X)`.
pub fn eval_poly(p: &FreeMatrixPolynomial, x: &MatrixTuple) -> Result<CMat> {
    if p.g != x.g() {
        return Err(Error::DimensionMismatch(format!(
            "polynomial in {} variables at a {}-tuple",
            p.g,
            x.g()
        )));
    }
    if !x.is_square() {
        return Err(Error::InvalidInput(
            "evaluation point must be square".into(),
        ));
    }
    let n = x.rows();
    let mut out = CMat::zeros(p.rows * n, p.cols * n);
    for (w, b) in &p.terms {
        out += kron(b, &w.eval(x));
    }
    Ok(out)
}

/// `(p_ncr, p_cr)`.
pub fn cross_term_split(p: &FreeMatrixPolynomial) -> (FreeMatrixPolynomial, FreeMatrixPolynomial) {
    let (cr, ncr): (BTreeMap<_, _>, BTreeMap<_, _>) = p
        .terms
        .clone()
        .into_iter()
        .partition(|(w, _)| w.is_cross_term());
    let with = |terms| FreeMatrixPolynomial {
        rows: p.rows,
        cols: p.cols,
        g: p.g,
        terms,
    };
    (with(ncr), with(cr))
}

/// `p(U_1* X_1 U_1, …, U_g* X_g U_g)`.
pub fn conjugate_coordinates(
    p: &FreeMatrixPolynomial,
    x: &MatrixTuple,
    us: &[CMat],
) -> Result<CMat> {
    if us.len() != x.g() {
        return Err(Error::DimensionMismatch(format!(
            "{} unitaries for {} variables",
            us.len(),
            x.g()
        )));
    }
    if us.iter().any(|u| u.shape() != (x.rows(), x.rows())) {
        return Err(Error::DimensionMismatch(
            "unitary size differs from evaluation level".into(),
        ));
    }
    let y = MatrixTuple::new(
        x.mats()
            .iter()
            .zip(us)
            .map(|(xi, u)| u.adjoint() * xi * u)
            .collect(),
    )?;
    eval_poly(p, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProductKind {
    #[serde(rename = "AB")]
    Plain,
    #[serde(rename = "A*B")]
    LeftAdjoint,
    #[serde(rename = "AB*")]
    RightAdjoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceWitness {
    CrossTerm(String),
    CoefficientProduct {
        first: String,
        second: String,
        product: ProductKind,
        norm: f64,
    },
    Numerical {
        #[serde(with = "io::cmat_vec")]
        unitaries: Vec<CMat>,
        point: MatrixTuple,
        spectral_gap: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePart {
    /// Variable this block depends on, counting from 1.
    pub var: usize,
    pub size: usize,
    pub polynomial: FreeMatrixPolynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyDecomposition {
    #[serde(with = "io::cmat")]
    pub basis: CMat,
    pub univariate_parts: Vec<UnivariatePart>,
    pub reconstruction_error: f64,
}

impl PolyDecomposition {
    /// `basis · (⊕ parts) · basis*`.
    pub fn reassemble(&self, g: usize) -> Result<FreeMatrixPolynomial> {
        let d = self.basis.nrows();
        let mut words: Vec<&Word> = self
            .univariate_parts
            .iter()
            .flat_map(|p| p.polynomial.terms.keys())
            .collect();
        words.sort();
        words.dedup();
        let mut out = FreeMatrixPolynomial::zero(d, d, g)?;
        for w in words {
            let blocks: Vec<CMat> = self
                .univariate_parts
                .iter()
                .map(|p| {
                    p.polynomial
                        .coefficient(w)
                        .cloned()
                        .unwrap_or_else(|| CMat::zeros(p.size, p.size))
                })
                .collect();
            out.add_term(
                w.clone(),
                &self.basis * block_diag(&blocks) * self.basis.adjoint(),
            )?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceVerdict {
    pub invariant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<InvarianceWitness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<PolyDecomposition>,
}

fn reject(w: InvarianceWitness) -> InvarianceVerdict {
    InvarianceVerdict {
        invariant: false,
        witness: Some(w),
        decomposition: None,
    }
}

pub fn check_monic(p: &FreeMatrixPolynomial, tol: &Tolerance) -> Result<()> {
    if p.rows != p.cols {
        return Err(Error::NotMonic(format!(
            "{}x{} coefficients are not square",
            p.rows, p.cols
        )));
    }
    let c0 = p
        .coefficient(&Word::empty())
        .cloned()
        .unwrap_or_else(|| CMat::zeros(p.rows, p.cols));
    let dev = (c0 - identity(p.rows)).norm();
    if dev > tol.bound(1.0) {
        return Err(Error::NotMonic(format!(
            "constant term differs from I by {dev:.3e}"
        )));
    }
    Ok(())
}

/// Decides invariance of a monic `p` under coordinate unitary conjugation and,
/// when invariant, splits it into univariate blocks.
pub fn invariance_test(
    p: &FreeMatrixPolynomial,
    tol: &Tolerance,
    seed: u64,
) -> Result<InvarianceVerdict> {
    check_monic(p, tol)?;
    let (_, cr) = cross_term_split(p);
    if let Some(w) = cr.terms.keys().next() {
        return Ok(reject(InvarianceWitness::CrossTerm(w.to_string())));
    }

    // group single-variable words
    let mut by_var: Vec<Vec<(&Word, &CMat)>> = vec![Vec::new(); p.g];
    for (w, m) in &p.terms {
        if let Some(v) = w.variable() {
            by_var[v - 1].push((w, m));
        }
    }
    for i in 0..p.g {
        for j in 0..p.g {
            if i == j {
                continue;
            }
            for &(wi, ai) in &by_var[i] {
                for &(wj, aj) in &by_var[j] {
                    let bound = tol.bound(ai.norm() * aj.norm());
                    let products = [
                        (ProductKind::Plain, ai * aj),
                        (ProductKind::LeftAdjoint, ai.adjoint() * aj),
                        (ProductKind::RightAdjoint, ai * aj.adjoint()),
                    ];
                    for (kind, prod) in products {
                        let norm = prod.norm();
                        if norm > bound {
                            return Ok(reject(InvarianceWitness::CoefficientProduct {
                                first: wi.to_string(),
                                second: wj.to_string(),
                                product: kind,
                                norm,
                            }));
                        }
                    }
                }
            }
        }
    }

    let decomposition = decompose(p, &by_var, tol)?;
    if let Some(w) = spectral_audit(p, tol, seed)? {
        return Ok(InvarianceVerdict {
            invariant: false,
            witness: Some(w),
            decomposition: None,
        });
    }
    Ok(InvarianceVerdict {
        invariant: true,
        witness: None,
        decomposition: Some(decomposition),
    })
}

/// Each variable's coefficients live on the span `V_i` of their ranges and
/// co-ranges; these spans are mutually orthogonal once the product identities
/// hold. The complement carries only the constant term and joins the first part.
fn decompose(
    p: &FreeMatrixPolynomial,
    by_var: &[Vec<(&Word, &CMat)>],
    tol: &Tolerance,
) -> Result<PolyDecomposition> {
    let d = p.rows;
    let mut spans: Vec<CMat> = Vec::with_capacity(p.g);
    for terms in by_var {
        if terms.is_empty() {
            spans.push(CMat::zeros(d, 0));
            continue;
        }
        let mut stacked = CMat::zeros(d, 2 * d * terms.len());
        for (k, (_, m)) in terms.iter().enumerate() {
            stacked.view_mut((0, 2 * d * k), (d, d)).copy_from(m);
            stacked
                .view_mut((0, 2 * d * k + d), (d, d))
                .copy_from(&m.adjoint());
        }
        let top = singular_values(&stacked)?.first().copied().unwrap_or(0.0);
        let (basis, _) = column_space(&stacked, tol.abs_tol + tol.rel_tol * top)?;
        spans.push(basis);
    }
    for i in 0..spans.len() {
        for j in i + 1..spans.len() {
            if spans[i].ncols() > 0 && spans[j].ncols() > 0 {
                let overlap = (spans[i].adjoint() * &spans[j]).norm();
                if overlap > tol.bound(1.0) * 10.0 {
                    return Err(Error::InternalInconsistency(format!(
                        "coefficient spaces of x{} and x{} overlap ({overlap:.3e})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    let used: usize = spans.iter().map(|s| s.ncols()).sum();
    if used > d {
        return Err(Error::InternalInconsistency(
            "coefficient spaces exceed the dimension".into(),
        ));
    }
    let mut joined = CMat::zeros(d, used);
    let mut col = 0;
    for s in &spans {
        joined.view_mut((0, col), (d, s.ncols())).copy_from(s);
        col += s.ncols();
    }
    let full = complete_basis(&joined)?;
    let remainder = d - used;

    // Columns ordered part by part; the remainder is appended to the first
    // non-empty part, or forms a constant part in x1 when every span is empty.
    let mut order: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut col = 0;
    for (i, s) in spans.iter().enumerate() {
        if s.ncols() > 0 {
            order.push((i + 1, (col..col + s.ncols()).collect()));
        }
        col += s.ncols();
    }
    if remainder > 0 {
        if let Some(first) = order.first_mut() {
            first.1.extend(used..d);
        } else {
            order.push((1, (used..d).collect()));
        }
    }
    let perm: Vec<usize> = order
        .iter()
        .flat_map(|(_, cols)| cols.iter().copied())
        .collect();
    let basis = crate::linalg::select_columns(&full, &perm);

    let mut parts = Vec::with_capacity(order.len());
    let mut start = 0;
    for (var, cols) in &order {
        let size = cols.len();
        let v = basis.columns(start, size).into_owned();
        let mut part = FreeMatrixPolynomial::zero(size, size, p.g)?;
        part.add_term(Word::empty(), identity(size))?;
        for &(w, m) in &by_var[var - 1] {
            part.add_term(w.clone(), v.adjoint() * m * &v)?;
        }
        parts.push(UnivariatePart {
            var: *var,
            size,
            polynomial: part,
        });
        start += size;
    }
    let mut dec = PolyDecomposition {
        basis,
        univariate_parts: parts,
        reconstruction_error: 0.0,
    };
    let diff = dec.reassemble(p.g)?.add(&negate(p))?;
    dec.reconstruction_error = diff.norm();
    if dec.reconstruction_error > tol.bound(p.norm()) {
        return Err(Error::InternalInconsistency(format!(
            "univariate blocks reproduce p only to {:.3e}",
            dec.reconstruction_error
        )));
    }
    Ok(dec)
}

fn negate(p: &FreeMatrixPolynomial) -> FreeMatrixPolynomial {
    FreeMatrixPolynomial {
        rows: p.rows,
        cols: p.cols,
        g: p.g,
        terms: p.terms.iter().map(|(w, m)| (w.clone(), -m)).collect(),
    }
}

const AUDIT_SAMPLES: usize = 20;

/// Singular values of `p(U*XU)` and `p(X)` must agree.
fn spectral_audit(
    p: &FreeMatrixPolynomial,
    tol: &Tolerance,
    seed: u64,
) -> Result<Option<InvarianceWitness>> {
    let mut rng = derive(seed, 0xa0d17);
    for k in 0..AUDIT_SAMPLES {
        let n = 2 + k % 2;
        let scale = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        let x = MatrixTuple::new(
            (0..p.g)
                .map(|_| complex_gaussian(&mut rng, n, n) * scale)
                .collect(),
        )?;
        let us: Vec<CMat> = (0..p.g).map(|_| haar_unitary(&mut rng, n)).collect();
        let s0 = singular_values(&eval_poly(p, &x)?)?;
        let s1 = singular_values(&conjugate_coordinates(p, &x, &us)?)?;
        let gap = s0
            .iter()
            .zip(&s1)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > tol.bound(s0[0]) {
            return Ok(Some(InvarianceWitness::Numerical {
                unitaries: us,
                point: x,
                spectral_gap: gap,
            }));
        }
    }
    Ok(None)
}

fn random_word_in(rng: &mut crate::rng::Rng, var: usize, len: usize) -> Word {
    Word::new(
        (0..len)
            .map(|_| Letter {
                var,
                starred: rng.random_bool(0.5),
            })
            .collect(),
    )
}

/// `U (I + ⊕_i p_i(x_i)) U*` with part `i` of size `sizes[i]` and random words of
/// length `1..=degree`. Returns the polynomial and `U`.
pub fn random_invariant(
    sizes: &[usize],
    degree: usize,
    seed: u64,
) -> Result<(FreeMatrixPolynomial, CMat)> {
    if sizes.is_empty() || sizes.contains(&0) || degree == 0 {
        return Err(Error::InvalidInput(
            "invariant polynomial needs positive sizes and degree".into(),
        ));
    }
    let g = sizes.len();
    let d: usize = sizes.iter().sum();
    let mut rng = seeded(seed);
    let mut hat = FreeMatrixPolynomial::identity(d, g)?;
    let mut offset = 0;
    for (i, &m) in sizes.iter().enumerate() {
        let count = rng.random_range(1..=3);
        for _ in 0..count {
            let len = rng.random_range(1..=degree);
            let w = random_word_in(&mut rng, i + 1, len);
            let mut c = CMat::zeros(d, d);
            c.view_mut((offset, offset), (m, m))
                .copy_from(&complex_gaussian(&mut rng, m, m));
            hat.add_term(w, c)?;
        }
        offset += m;
    }
    let u = haar_unitary(&mut rng, d);
    let ua = u.adjoint();
    Ok((hat.compress(&ua, &ua)?, u))
}

/// A random invariant polynomial plus one cross term of length `2..=degree`.
pub fn random_crossterm(
    g: usize,
    d: usize,
    degree: usize,
    seed: u64,
) -> Result<FreeMatrixPolynomial> {
    if g < 2 || degree < 2 || d == 0 {
        return Err(Error::InvalidInput(
            "cross terms need g ≥ 2 and degree ≥ 2".into(),
        ));
    }
    let mut rng = derive(seed, 0xc7055);
    let sizes: Vec<usize> = (0..g)
        .map(|i| (d / g + usize::from(i < d % g)).max(1))
        .collect();
    let (mut p, _) = random_invariant(&sizes, degree, seed)?;
    let len = rng.random_range(2..=degree);
    let mut letters = Vec::with_capacity(len);
    let a = rng.random_range(1..=g);
    let b = 1 + (a + rng.random_range(0..g - 1)) % g;
    letters.push(Letter {
        var: a,
        starred: rng.random_bool(0.5),
    });
    letters.push(Letter {
        var: b,
        starred: rng.random_bool(0.5),
    });
    for _ in 2..len {
        letters.push(Letter {
            var: rng.random_range(1..=g),
            starred: rng.random_bool(0.5),
        });
    }
    let n = p.rows;
    p.add_term(Word::new(letters), complex_gaussian(&mut rng, n, n))?;
    Ok(p)
}

/// No cross terms, but every variable gets generic full-size coefficients,
/// so the coefficient products between variables do not vanish.
pub fn random_product_violating(
    g: usize,
    d: usize,
    degree: usize,
    seed: u64,
) -> Result<FreeMatrixPolynomial> {
    if g < 2 || d == 0 || degree == 0 {
        return Err(Error::InvalidInput("product violation needs g ≥ 2".into()));
    }
    let mut rng = seeded(seed);
    let mut p = FreeMatrixPolynomial::identity(d, g)?;
    for var in 1..=g {
        let len = rng.random_range(1..=degree);
        let w = random_word_in(&mut rng, var, len);
        p.add_term(w, complex_gaussian(&mut rng, d, d))?;
    }
    Ok(p)
}
