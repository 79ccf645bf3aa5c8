//! Inclusion of free spectrahedra through completely positive maps, with a
//! sampling falsifier for the negative direction.

mod solver;

pub use solver::{
    solve_feasibility, solve_feasibility_with, EqualityConstraint, LinearTerm, SdpProblem,
    SolverOptions,
};

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{complex_gaussian, eigh, identity, CMat, CVec, ONE};
use crate::pencil_core::{boundary_scale, eval_monic, membership};
use crate::rng::{derive, Rng};
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionStatus {
    Included,
    NotIncluded,
    Indeterminate,
}

/// A point of `D_A` outside `D_B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub point: MatrixTuple,
    pub level: usize,
    /// Unit eigenvector of `L_B(X)` for its negative eigenvalue.
    #[serde(with = "io::cvec")]
    pub direction: CVec,
    /// Smallest eigenvalue of `L_B(X)`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionVerdict {
    pub status: InclusionStatus,
    #[serde(
        with = "io::cmat_opt",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub choi_witness: Option<CMat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InclusionOptions {
    pub seed: u64,
    pub restarts: usize,
    pub climb_steps: usize,
    pub solver: SolverOptions,
}

impl Default for InclusionOptions {
    fn default() -> Self {
        InclusionOptions {
            seed: 0,
            restarts: 64,
            climb_steps: 40,
            solver: SolverOptions::default(),
        }
    }
}

/// `Σ_ab E_ab ⊗ f(E_ab)`.
pub fn choi_of_map(d_in: usize, f: impl Fn(&CMat) -> CMat) -> CMat {
    let mut blocks: Vec<Vec<CMat>> = Vec::with_capacity(d_in);
    let mut d_out = 0;
    for a in 0..d_in {
        let mut row = Vec::with_capacity(d_in);
        for b in 0..d_in {
            let mut e = CMat::zeros(d_in, d_in);
            e[(a, b)] = ONE;
            let img = f(&e);
            d_out = img.nrows();
            row.push(img);
        }
        blocks.push(row);
    }
    let mut c = CMat::zeros(d_in * d_out, d_in * d_out);
    for (a, row) in blocks.iter().enumerate() {
        for (b, img) in row.iter().enumerate() {
            c.view_mut((a * d_out, b * d_out), (d_out, d_out))
                .copy_from(img);
        }
    }
    c
}

/// Applies the map with Choi matrix `choi` to `m` (`d_in x d_in`).
pub fn choi_apply(choi: &CMat, d_in: usize, m: &CMat) -> Result<CMat> {
    if d_in == 0
        || !choi.nrows().is_multiple_of(d_in)
        || !choi.is_square()
        || m.shape() != (d_in, d_in)
    {
        return Err(Error::DimensionMismatch(
            "Choi matrix and argument sizes disagree".into(),
        ));
    }
    let d_out = choi.nrows() / d_in;
    let mut out = CMat::zeros(d_out, d_out);
    for a in 0..d_in {
        for b in 0..d_in {
            let w = m[(a, b)];
            if w != Complex64::new(0.0, 0.0) {
                out += choi.view((a * d_out, b * d_out), (d_out, d_out)) * w;
            }
        }
    }
    Ok(out)
}

/// Choi block `C` (index 0) and slack `S` (index 1) with `Φ(A_j) = B_j`,
/// `Φ(I) + S = I`.
pub fn inclusion_problem(a: &MatrixTuple, b: &MatrixTuple) -> SdpProblem {
    let (da, db) = (a.d(), b.d());
    let mut p = SdpProblem::new(vec![da * db, db]);
    p.slack_blocks = vec![1];
    for (am, bm) in a.mats().iter().zip(b.mats()) {
        for pr in 0..db {
            for q in 0..db {
                let mut terms = Vec::new();
                for i in 0..da {
                    for j in 0..da {
                        let w = am[(i, j)];
                        if w.norm() > 0.0 {
                            terms.push(LinearTerm::new(0, i * db + pr, j * db + q, w));
                        }
                    }
                }
                p.add(terms, bm[(pr, q)]);
            }
        }
    }
    for pr in 0..db {
        for q in pr..db {
            let mut terms: Vec<LinearTerm> = (0..da)
                .map(|i| LinearTerm::new(0, i * db + pr, i * db + q, ONE))
                .collect();
            terms.push(LinearTerm::new(1, pr, q, ONE));
            p.add(
                terms,
                if pr == q {
                    ONE
                } else {
                    Complex64::new(0.0, 0.0)
                },
            );
        }
    }
    p
}

/// Decides `D_A ⊆ D_B`.
pub fn includes(a: &MatrixTuple, b: &MatrixTuple, tol: &Tolerance) -> Result<InclusionVerdict> {
    includes_with(a, b, tol, &InclusionOptions::default())
}

pub fn includes_with(
    a: &MatrixTuple,
    b: &MatrixTuple,
    tol: &Tolerance,
    options: &InclusionOptions,
) -> Result<InclusionVerdict> {
    if a.g() != b.g() {
        return Err(Error::DimensionMismatch(format!(
            "{}-tuple against {}-tuple",
            a.g(),
            b.g()
        )));
    }
    if !a.is_square() || !b.is_square() {
        return Err(Error::InvalidInput(
            "inclusion needs square coefficient tuples".into(),
        ));
    }
    let problem = inclusion_problem(a, b);
    if a.d() == b.d() && a.distance(b) <= tol.abs_tol {
        let c = choi_of_map(a.d(), |x| x.clone());
        let s = CMat::zeros(b.d(), b.d());
        let blocks = vec![c, s];
        if problem.verify(&blocks, tol)? {
            let [c, _] = <[CMat; 2]>::try_from(blocks).expect("two blocks");
            return Ok(included(c));
        }
    }
    let note = match solver::solve_feasibility_with(&problem, tol, &options.solver) {
        Ok(Some(mut blocks)) => return Ok(included(blocks.swap_remove(0))),
        Ok(None) => "completely positive map infeasible".to_string(),
        Err(Error::IterationLimit(n)) => format!("solver stopped after {n} iterations"),
        Err(e) => return Err(e),
    };
    match falsify(a, b, tol, options)? {
        Some(cx) => Ok(InclusionVerdict {
            status: InclusionStatus::NotIncluded,
            choi_witness: None,
            counterexample: Some(cx),
            note: Some(note),
        }),
        None => Ok(InclusionVerdict {
            status: InclusionStatus::Indeterminate,
            choi_witness: None,
            counterexample: None,
            note: Some(format!("{note}; no counterexample found")),
        }),
    }
}

fn included(c: CMat) -> InclusionVerdict {
    InclusionVerdict {
        status: InclusionStatus::Included,
        choi_witness: Some(c),
        counterexample: None,
        note: None,
    }
}

fn random_direction(rng: &mut Rng, g: usize, n: usize) -> MatrixTuple {
    MatrixTuple::new((0..g).map(|_| complex_gaussian(rng, n, n)).collect())
        .expect("finite gaussian tuple")
}

/// A point on the ray through `y` that lies in `D_A` and is as far out as
/// possible, or well past `D_B` when the ray stays in `D_A`.
fn push_out(a: &MatrixTuple, b: &MatrixTuple, y: &MatrixTuple) -> Result<Option<MatrixTuple>> {
    let t = match boundary_scale(a, y)? {
        Some(t) => t * (1.0 - 1e-9),
        None => match boundary_scale(b, y)? {
            Some(tb) => 2.0 * tb,
            None => return Ok(None),
        },
    };
    Ok(Some(y.scale(Complex64::new(t, 0.0))))
}

fn margin(b: &MatrixTuple, x: &MatrixTuple) -> Result<f64> {
    Ok(eigh(&eval_monic(b, x)?)?.0[0])
}

/// Hill climb on the smallest eigenvalue of `L_B` over boundary points of
/// `D_A`, restarted at levels `1..=max(d_A, d_B)`.
pub fn falsify(
    a: &MatrixTuple,
    b: &MatrixTuple,
    tol: &Tolerance,
    options: &InclusionOptions,
) -> Result<Option<Counterexample>> {
    let top = a.d().max(b.d());
    let g = a.g();
    let mut rng = derive(options.seed, 0xfa151f1e);
    for restart in 0..options.restarts {
        let n = 1 + restart % top;
        let mut y = random_direction(&mut rng, g, n);
        let Some(mut x) = push_out(a, b, &y)? else {
            continue;
        };
        let mut best = margin(b, &x)?;
        let mut step = 0.5;
        for _ in 0..options.climb_steps {
            if best < -1e-6 {
                break;
            }
            let dy = random_direction(&mut rng, g, n);
            let scale = step * y.norm() / dy.norm().max(1e-300);
            let trial_y = MatrixTuple::new(
                y.mats()
                    .iter()
                    .zip(dy.mats())
                    .map(|(u, v)| u + v * Complex64::new(scale, 0.0))
                    .collect(),
            )?;
            let Some(trial_x) = push_out(a, b, &trial_y)? else {
                step *= 0.5;
                continue;
            };
            let m = margin(b, &trial_x)?;
            if m < best {
                best = m;
                y = trial_y;
                x = trial_x;
                step = (step * 1.5).min(2.0);
            } else {
                step *= 0.6;
            }
            if rng.random_bool(0.05) {
                step = 0.5;
            }
        }
        if best < -1e-6 {
            let in_a = membership(a, &x, tol)?;
            let in_b = membership(b, &x, tol)?;
            if in_a.member && !in_b.member {
                let (vals, vecs) = eigh(&eval_monic(b, &x)?)?;
                return Ok(Some(Counterexample {
                    point: x,
                    level: n,
                    direction: vecs.column(0).into_owned(),
                    margin: vals[0],
                }));
            }
        }
    }
    Ok(None)
}

/// Re-checks a verdict against fresh computations: the witness against the
/// linear constraints and PSD cone, the counterexample against membership.
pub fn verify_verdict(
    a: &MatrixTuple,
    b: &MatrixTuple,
    v: &InclusionVerdict,
    tol: &Tolerance,
) -> Result<bool> {
    match v.status {
        InclusionStatus::Included => {
            let Some(c) = &v.choi_witness else {
                return Ok(false);
            };
            let unit = choi_apply(c, a.d(), &identity(a.d()))?;
            let slack = identity(b.d()) - unit;
            inclusion_problem(a, b).verify(&[c.clone(), slack], tol)
        }
        InclusionStatus::NotIncluded => {
            let Some(cx) = &v.counterexample else {
                return Ok(false);
            };
            Ok(membership(a, &cx.point, tol)?.member && !membership(b, &cx.point, tol)?.member)
        }
        InclusionStatus::Indeterminate => Ok(true),
    }
}
