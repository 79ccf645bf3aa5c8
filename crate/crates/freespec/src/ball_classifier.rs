//! Free circularity: recognising the corner form `[[0, F], [0, 0]]` of a
//! matrix pencil ball, and finite envelopes of separating pencils.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{boundary_on_ray, random_direction};
use crate::io;
use crate::linalg::{complete_basis, svd, CMat};
use crate::pencil_core::{pencil_ball_norm, HomogeneousPencil};
use crate::rng::derive;
use crate::separation::{separate_with, SeparationOptions};
use crate::tolerance::Tolerance;
use crate::tuple::MatrixTuple;
use crate::tuple_algebra::{minimize_pencil, MinimalityCertificate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilBallForm {
    pub s: usize,
    pub t: usize,
    #[serde(rename = "F")]
    pub f: MatrixTuple,
    #[serde(with = "io::cmat")]
    pub basis: CMat,
}

impl PencilBallForm {
    /// `[[0, F_j], [0, 0]]`.
    pub fn corner_tuple(&self) -> MatrixTuple {
        let d = self.s + self.t;
        self.f.map(|fj| {
            let mut m = CMat::zeros(d, d);
            m.view_mut((0, self.s), (self.s, self.t)).copy_from(fj);
            m
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeCircularClassification {
    pub free_circular: bool,
    /// All coefficients of the minimal tuple vanish.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<PencilBallForm>,
    pub minimality: MinimalityCertificate,
}

/// Detects the corner form. Requires `A_s A_u = 0` for all pairs; the
/// joint range `G` then lies in the joint kernel and splits the space.
pub fn detect_pencil_ball(a: &MatrixTuple, tol: &Tolerance) -> Result<Option<PencilBallForm>> {
    if !a.is_square() {
        return Err(Error::InvalidInput(
            "pencil ball detection needs square coefficients".into(),
        ));
    }
    let mats = a.mats();
    for x in mats {
        for y in mats {
            let bound = tol.abs_tol + tol.rel_tol * x.norm() * y.norm();
            if (x * y).norm() > bound {
                return Ok(None);
            }
        }
    }
    let d = a.d();
    let mut stacked = CMat::zeros(d, d * a.g());
    for (j, m) in mats.iter().enumerate() {
        stacked.view_mut((0, j * d), (d, d)).copy_from(m);
    }
    let (u, sv, _) = svd(&stacked)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= tol.abs_tol {
        return Ok(None);
    }
    let thr = tol.rel_tol * top;
    if let Some(&amb) = sv.iter().find(|&&x| x >= thr / 1000.0 && x < thr * 10.0) {
        return Err(Error::RankAmbiguity(amb / top));
    }
    let s = sv.iter().filter(|&&x| x >= thr).count();
    let t = d - s;
    if t == 0 {
        return Ok(None);
    }
    let basis = complete_basis(&u.columns(0, s).into_owned())?;
    let conj = a.conjugate(&basis);
    for (m, orig) in conj.mats().iter().zip(mats) {
        let mut rest = m.clone();
        rest.view_mut((0, s), (s, t))
            .fill(num_complex::Complex64::new(0.0, 0.0));
        if rest.norm() > tol.bound(orig.norm()) {
            return Ok(None);
        }
    }
    let f = conj.map(|m| m.view((0, s), (s, t)).into_owned());
    Ok(Some(PencilBallForm { s, t, f, basis }))
}

pub fn classify_free_circular(
    a: &MatrixTuple,
    tol: &Tolerance,
) -> Result<FreeCircularClassification> {
    let minimality = minimize_pencil(a, tol)?;
    let m = &minimality.minimal_tuple;
    if m.norm() <= tol.abs_tol {
        return Ok(FreeCircularClassification {
            free_circular: true,
            degenerate: true,
            form: None,
            minimality,
        });
    }
    let form = detect_pencil_ball(m, tol)?;
    Ok(FreeCircularClassification {
        free_circular: form.is_some(),
        degenerate: false,
        form,
        minimality,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub level: usize,
    pub point: MatrixTuple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallEnvelope {
    pub pencils: Vec<HomogeneousPencil>,
    pub boundary_samples: Vec<BoundarySample>,
    /// Largest `1 − max_Λ ‖Λ(X)‖` over the boundary samples.
    pub sup_norm_defect: f64,
    pub cap_reached: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeOptions {
    pub samples: usize,
    pub seed: u64,
    /// Sample level; defaults to `d`.
    pub level: Option<usize>,
    pub separation: SeparationOptions,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            samples: 32,
            seed: 0,
            level: None,
            separation: SeparationOptions::default(),
        }
    }
}

const COVER_SLACK: f64 = 1e-6;

/// Separating pencils at sampled boundary points of `D_A(d)`, greedily
/// thinned to a cover of the samples with at most `d²` pencils.
pub fn build_envelope(
    a: &MatrixTuple,
    form: &PencilBallForm,
    tol: &Tolerance,
    options: &EnvelopeOptions,
) -> Result<BallEnvelope> {
    let d = a.d();
    if form.s + form.t != d {
        return Err(Error::DimensionMismatch(
            "pencil-ball form does not match the tuple".into(),
        ));
    }
    let n = options.level.unwrap_or(d);
    if options.samples == 0 {
        return Ok(BallEnvelope {
            pencils: Vec::new(),
            boundary_samples: Vec::new(),
            sup_norm_defect: 1.0,
            cap_reached: false,
            notes: Vec::new(),
        });
    }
    let mut rng = derive(options.seed, 0xe7e1);
    let mut notes = Vec::new();
    let mut samples = Vec::with_capacity(options.samples);
    let mut candidates = Vec::with_capacity(options.samples);
    let mut attempts = 0;
    while samples.len() < options.samples && attempts < 4 * options.samples {
        attempts += 1;
        let y = random_direction(&mut rng, a.g(), n);
        let Some(pt) = boundary_on_ray(a, &y)? else {
            notes.push("skipped a direction that never leaves the spectrahedron".into());
            continue;
        };
        let sep_opts = SeparationOptions {
            seed: options.seed.wrapping_add(samples.len() as u64),
            ..options.separation.clone()
        };
        let cert = separate_with(a, &pt, tol, &sep_opts)?;
        samples.push(BoundarySample {
            level: n,
            point: pt.x,
        });
        candidates.push(cert.q);
    }
    let cover: Vec<Vec<f64>> = candidates
        .iter()
        .map(|q| {
            samples
                .iter()
                .map(|s| pencil_ball_norm(q, &s.point))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let cap = d * d;
    let mut chosen: Vec<usize> = Vec::new();
    let mut best = vec![0.0_f64; samples.len()];
    let covered = |best: &[f64]| best.iter().all(|&b| b >= 1.0 - COVER_SLACK);
    while !covered(&best) && chosen.len() < cap {
        let gain = |q: usize| {
            cover[q]
                .iter()
                .zip(&best)
                .filter(|(v, b)| **b < 1.0 - COVER_SLACK && **v >= 1.0 - COVER_SLACK)
                .count()
        };
        let Some(q) = (0..candidates.len())
            .filter(|q| !chosen.contains(q))
            .max_by_key(|&q| (gain(q), std::cmp::Reverse(q)))
        else {
            break;
        };
        chosen.push(q);
        for (b, v) in best.iter_mut().zip(&cover[q]) {
            *b = b.max(*v);
        }
    }
    let cap_reached = !covered(&best);
    if cap_reached {
        notes.push(format!("stopped at the cap of {cap} pencils"));
    }
    let defect = best.iter().map(|b| (1.0 - b).max(0.0)).fold(0.0, f64::max);
    Ok(BallEnvelope {
        pencils: chosen
            .into_iter()
            .map(|q| HomogeneousPencil::new(candidates[q].clone()))
            .collect(),
        boundary_samples: samples,
        sup_norm_defect: defect,
        cap_reached,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::pencil_ball_plant;
    use crate::linalg::{block_diag, ONE, ZERO};

    fn e12() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
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
    fn planted_corner_recovered() {
        let tol = Tolerance::default();
        let (a, f, _) = pencil_ball_plant(2, 2, 3, 5).unwrap();
        let form = detect_pencil_ball(&a, &tol).unwrap().unwrap();
        assert_eq!((form.s, form.t), (2, 3));
        // F is recovered up to left and right unitaries: compare singular values of Λ_F at a point
        let x = MatrixTuple::scalars(&[
            num_complex::Complex64::new(0.3, 0.1),
            num_complex::Complex64::new(-0.2, 0.5),
        ]);
        let lhs = crate::linalg::singular_values(
            &crate::pencil_core::eval_homogeneous(&form.f, &x).unwrap(),
        )
        .unwrap();
        let rhs =
            crate::linalg::singular_values(&crate::pencil_core::eval_homogeneous(&f, &x).unwrap())
                .unwrap();
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-10);
        }
        assert!(a.conjugate(&form.basis).distance(&form.corner_tuple()) < 1e-9);
    }

    #[test]
    fn ball_is_one_by_g() {
        let r = classify_free_circular(&ball(3), &Tolerance::default()).unwrap();
        assert!(r.free_circular);
        let form = r.form.unwrap();
        assert_eq!((form.s, form.t), (1, 3));
    }

    #[test]
    fn swap_matrix_is_not_a_corner() {
        let a =
            MatrixTuple::new(vec![CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])]).unwrap();
        assert_eq!(detect_pencil_ball(&a, &Tolerance::default()).unwrap(), None);
    }

    #[test]
    fn bidisk_is_two_by_two_corner() {
        let z = CMat::zeros(2, 2);
        let a = MatrixTuple::new(vec![
            block_diag(&[e12(), z.clone()]),
            block_diag(&[z, e12()]),
        ])
        .unwrap();
        let r = classify_free_circular(&a, &Tolerance::default()).unwrap();
        assert!(r.free_circular);
        let form = r.form.unwrap();
        assert_eq!((form.s, form.t), (2, 2));
    }

    #[test]
    fn zero_tuple_is_degenerate() {
        let r = classify_free_circular(&MatrixTuple::zeros(2, 3), &Tolerance::default()).unwrap();
        assert!(r.free_circular && r.degenerate && r.form.is_none());
    }

    #[test]
    fn disk_envelope_is_one_scalar_pencil() {
        let tol = Tolerance::default();
        let a = MatrixTuple::new(vec![e12()]).unwrap();
        let form = detect_pencil_ball(&a, &tol).unwrap().unwrap();
        let opts = EnvelopeOptions {
            samples: 6,
            level: Some(1),
            ..EnvelopeOptions::default()
        };
        let env = build_envelope(&a, &form, &tol, &opts).unwrap();
        assert_eq!(env.pencils.len(), 1);
        assert!(env.sup_norm_defect < 1e-6);
        let q = &env.pencils[0].coefficients;
        assert_eq!(q.rows(), 1);
        assert!((q.get(0)[(0, 0)].norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_envelope() {
        let tol = Tolerance::default();
        let a = ball(2);
        let form = detect_pencil_ball(&a, &tol).unwrap().unwrap();
        let opts = EnvelopeOptions {
            samples: 0,
            ..EnvelopeOptions::default()
        };
        let env = build_envelope(&a, &form, &tol, &opts).unwrap();
        assert!(env.pencils.is_empty());
        assert_eq!(env.sup_norm_defect, 1.0);
    }
}
