//! Seeded random instances: planted canonical forms, generic tuples, points.

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freepoly::{self, FreeMatrixPolynomial};
use crate::linalg::{complex_gaussian, eigh, haar_unitary, CMat};
use crate::pencil_core::{boundary_scale, eval_monic};
use crate::rng::{derive, seeded, Rng};
use crate::separation::DetailedBoundaryPoint;
use crate::tuple::MatrixTuple;
use crate::tuple_algebra::commutant_basis;

/// Scale beyond which a ray is treated as never leaving the spectrahedron.
pub const SCALE_CAP: f64 = 1e6;

const PLANT_ATTEMPTS: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    HaarUnitary { n: usize },
    SuperdiagonalTuple { g: usize, sizes: Vec<usize> },
    PencilBallTuple { g: usize, s: usize, t: usize },
    GenericTuple { g: usize, d: usize },
    MemberPoint { pencil: MatrixTuple, n: usize },
    BoundaryPoint { pencil: MatrixTuple, n: usize },
    InvariantPolynomial { sizes: Vec<usize>, degree: usize },
    CrosstermPolynomial { g: usize, d: usize, degree: usize },
    ProductViolatingPolynomial { g: usize, d: usize, degree: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Generated {
    Matrix(#[serde(with = "crate::io::cmat")] CMat),
    Tuple(MatrixTuple),
    Boundary(DetailedBoundaryPoint),
    Polynomial(FreeMatrixPolynomial),
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Generated> {
    Ok(match spec {
        GeneratorSpec::HaarUnitary { n } => {
            positive(&[*n])?;
            Generated::Matrix(haar_unitary(&mut seeded(seed), *n))
        }
        GeneratorSpec::SuperdiagonalTuple { g, sizes } => {
            Generated::Tuple(superdiagonal_tuple(*g, sizes, seed)?)
        }
        GeneratorSpec::PencilBallTuple { g, s, t } => {
            Generated::Tuple(pencil_ball_tuple(*g, *s, *t, seed)?)
        }
        GeneratorSpec::GenericTuple { g, d } => Generated::Tuple(generic_tuple(*g, *d, seed)?),
        GeneratorSpec::MemberPoint { pencil, n } => {
            Generated::Tuple(member_point(pencil, *n, seed)?)
        }
        GeneratorSpec::BoundaryPoint { pencil, n } => {
            Generated::Boundary(boundary_point(pencil, *n, seed)?)
        }
        GeneratorSpec::InvariantPolynomial { sizes, degree } => {
            Generated::Polynomial(freepoly::random_invariant(sizes, *degree, seed)?.0)
        }
        GeneratorSpec::CrosstermPolynomial { g, d, degree } => {
            Generated::Polynomial(freepoly::random_crossterm(*g, *d, *degree, seed)?)
        }
        GeneratorSpec::ProductViolatingPolynomial { g, d, degree } => {
            Generated::Polynomial(freepoly::random_product_violating(*g, *d, *degree, seed)?)
        }
    })
}

fn positive(values: &[usize]) -> Result<()> {
    if values.contains(&0) {
        return Err(Error::InvalidInput(
            "generator sizes must be positive".into(),
        ));
    }
    Ok(())
}

fn is_irreducible(a: &MatrixTuple) -> Result<bool> {
    Ok(commutant_basis(a)?.len() == 1)
}

/// Tuple with nonzero blocks only at positions `(j, j+1)` of the level
/// decomposition `sizes`, every slot hit by some `A_s`, conjugated by a Haar
/// unitary. Resampled until irreducible.
pub fn superdiagonal_tuple(g: usize, sizes: &[usize], seed: u64) -> Result<MatrixTuple> {
    positive(&[g])?;
    positive(sizes)?;
    if sizes.len() < 2 {
        return Err(Error::InvalidInput(
            "a superdiagonal plant needs at least two levels".into(),
        ));
    }
    let d: usize = sizes.iter().sum();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &m| {
            let o = *acc;
            *acc += m;
            Some(o)
        })
        .collect();
    let mut rng = seeded(seed);
    for _ in 0..PLANT_ATTEMPTS {
        let mut mats = vec![CMat::zeros(d, d); g];
        for j in 0..sizes.len() - 1 {
            let forced = rng.random_range(0..g);
            for (s, m) in mats.iter_mut().enumerate() {
                if s != forced && rng.random_bool(0.3) {
                    continue;
                }
                let blk = complex_gaussian(&mut rng, sizes[j], sizes[j + 1]);
                m.view_mut((offsets[j], offsets[j + 1]), (sizes[j], sizes[j + 1]))
                    .copy_from(&blk);
            }
        }
        let u = haar_unitary(&mut rng, d);
        let a = MatrixTuple::new(mats)?.conjugate(&u);
        if is_irreducible(&a)? {
            return Ok(a);
        }
    }
    Err(Error::InvalidInput(format!(
        "no irreducible superdiagonal plant with sizes {sizes:?} and g = {g}"
    )))
}

/// `U*[[0, F],[0, 0]]U` with `F` an `s x t` Gaussian tuple, resampled until irreducible.
pub fn pencil_ball_tuple(g: usize, s: usize, t: usize, seed: u64) -> Result<MatrixTuple> {
    Ok(pencil_ball_plant(g, s, t, seed)?.0)
}

/// Also returns the planted `F` and the conjugating unitary.
pub fn pencil_ball_plant(
    g: usize,
    s: usize,
    t: usize,
    seed: u64,
) -> Result<(MatrixTuple, MatrixTuple, CMat)> {
    positive(&[g, s, t])?;
    let d = s + t;
    let mut rng = seeded(seed);
    for _ in 0..PLANT_ATTEMPTS {
        let f = MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, s, t)).collect())?;
        let e = f.map(|fj| {
            let mut m = CMat::zeros(d, d);
            m.view_mut((0, s), (s, t)).copy_from(fj);
            m
        });
        let u = haar_unitary(&mut rng, d);
        let a = e.conjugate(&u);
        if is_irreducible(&a)? {
            return Ok((a, f, u));
        }
    }
    Err(Error::InvalidInput(format!(
        "no irreducible pencil-ball plant with s = {s}, t = {t}, g = {g}"
    )))
}

/// Gaussian entries scaled by `1/√d`.
pub fn generic_tuple(g: usize, d: usize, seed: u64) -> Result<MatrixTuple> {
    positive(&[g, d])?;
    let mut rng = seeded(seed);
    let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    MatrixTuple::new(
        (0..g)
            .map(|_| complex_gaussian(&mut rng, d, d) * scale)
            .collect(),
    )
}

pub fn random_direction(rng: &mut Rng, g: usize, n: usize) -> MatrixTuple {
    MatrixTuple::new((0..g).map(|_| complex_gaussian(rng, n, n)).collect())
        .expect("finite gaussian tuple")
}

/// A random member of `D_A(n)`: a random direction scaled uniformly inside
/// its exit radius (capped for rays that never exit).
pub fn member_point(a: &MatrixTuple, n: usize, seed: u64) -> Result<MatrixTuple> {
    positive(&[n])?;
    let mut rng = derive(seed, 0x3e3b);
    sample_member(a, n, &mut rng)
}

pub fn sample_member(a: &MatrixTuple, n: usize, rng: &mut Rng) -> Result<MatrixTuple> {
    let y = random_direction(rng, a.g(), n);
    let r: f64 = rng.random();
    let t = boundary_scale(a, &y)?.unwrap_or(2.0).min(SCALE_CAP);
    Ok(y.scale(Complex64::new(r * t, 0.0)))
}

/// A random detailed boundary point of `D_A(n)`.
pub fn boundary_point(a: &MatrixTuple, n: usize, seed: u64) -> Result<DetailedBoundaryPoint> {
    positive(&[n])?;
    let mut rng = derive(seed, 0xb0d);
    for _ in 0..PLANT_ATTEMPTS {
        let y = random_direction(&mut rng, a.g(), n);
        if let Some(p) = boundary_on_ray(a, &y)? {
            return Ok(p);
        }
    }
    Err(Error::Unbounded(SCALE_CAP))
}

/// Exit point of the ray through `y`, with a kernel vector of `L_A`.
pub fn boundary_on_ray(a: &MatrixTuple, y: &MatrixTuple) -> Result<Option<DetailedBoundaryPoint>> {
    let Some(t) = boundary_scale(a, y)? else {
        return Ok(None);
    };
    if t > SCALE_CAP {
        return Ok(None);
    }
    let x = y.scale(Complex64::new(t, 0.0));
    let (_, vecs) = eigh(&eval_monic(a, &x)?)?;
    Ok(Some(DetailedBoundaryPoint {
        x,
        v: vecs.column(0).into_owned(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerance::Tolerance;

    #[test]
    fn deterministic() {
        let a = superdiagonal_tuple(2, &[1, 2, 1], 7).unwrap();
        let b = superdiagonal_tuple(2, &[1, 2, 1], 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, superdiagonal_tuple(2, &[1, 2, 1], 8).unwrap());
    }

    #[test]
    fn superdiagonal_is_nilpotent() {
        let a = superdiagonal_tuple(3, &[2, 1, 2], 1).unwrap();
        for m in a.mats() {
            assert!((m * m * m).norm() < 1e-12 * (1.0 + m.norm().powi(3)));
        }
    }

    #[test]
    fn pencil_ball_products_vanish() {
        let a = pencil_ball_tuple(2, 2, 3, 3).unwrap();
        for x in a.mats() {
            for y in a.mats() {
                assert!((x * y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn incompatible_sizes_are_rejected() {
        assert!(superdiagonal_tuple(1, &[3, 1], 0).is_err());
        assert!(superdiagonal_tuple(2, &[2], 0).is_err());
    }

    #[test]
    fn disk_boundary_has_unit_modulus() {
        let a = MatrixTuple::new(vec![CMat::from_row_slice(
            2,
            2,
            &[0.0, 1.0, 0.0, 0.0].map(|v| Complex64::new(v, 0.0)),
        )])
        .unwrap();
        let p = boundary_point(&a, 1, 11).unwrap();
        assert!((p.x.get(0)[(0, 0)].norm() - 1.0).abs() < 1e-9);
        let r = crate::pencil_core::membership(&a, &p.x, &Tolerance::default()).unwrap();
        assert!(r.member && r.boundary);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec: GeneratorSpec =
            serde_json::from_str(r#"{"kind":"superdiagonal_tuple","g":2,"sizes":[1,2,1]}"#)
                .unwrap();
        assert_eq!(
            spec,
            GeneratorSpec::SuperdiagonalTuple {
                g: 2,
                sizes: vec![1, 2, 1]
            }
        );
    }
}
