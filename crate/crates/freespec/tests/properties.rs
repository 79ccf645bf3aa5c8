use freespec::circular_classifier::{grading_residual, solve_grading};
use freespec::freepoly::{eval_poly, random_crossterm, FreeMatrixPolynomial};
use freespec::generate::{generic_tuple, pencil_ball_plant, sample_member, superdiagonal_tuple};
use freespec::inclusion_sdp::{includes, InclusionStatus};
use freespec::linalg::{c, complex_gaussian, haar_unitary, identity, kron, svd, CMat};
use freespec::pencil_core::{boundary_scale, canonical_shuffle, eval_monic, min_eigenvalue};
use freespec::rng::seeded;
use freespec::{MatrixTuple, Tolerance};
use nalgebra::DVector;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn svd_factors_rank_deficient_input(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..8, rank in 0usize..8) {
        let mut rng = seeded(seed);
        let rank = rank.min(rows).min(cols);
        let m = if rank == 0 {
            CMat::zeros(rows, cols)
        } else {
            complex_gaussian(&mut rng, rows, rank) * complex_gaussian(&mut rng, rank, cols)
        };
        let (u, s, v) = svd(&m).unwrap();
        let sd = CMat::from_diagonal(&DVector::from_iterator(s.len(), s.iter().map(|&x| c(x, 0.0))));
        prop_assert!((&u * sd * v.adjoint() - &m).norm() <= 1e-12 * (1.0 + m.norm()));
        prop_assert!((u.adjoint() * &u - identity(u.ncols())).norm() <= 1e-12);
        prop_assert!((v.adjoint() * &v - identity(v.ncols())).norm() <= 1e-12);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let small = s.iter().filter(|&&x| x <= 1e-10 * (1.0 + s[0])).count();
        prop_assert_eq!(small, s.len() - rank);
    }

    #[test]
    fn shuffle_intertwines_kronecker_factors(seed in any::<u64>(), ell in 1usize..5, nu in 1usize..5) {
        let mut rng = seeded(seed);
        let b = complex_gaussian(&mut rng, ell, ell);
        let z = complex_gaussian(&mut rng, nu, nu);
        let p = canonical_shuffle(ell, nu).unwrap();
        let lhs = kron(&b, &z);
        let rhs = p.adjoint() * kron(&z, &b) * &p;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + b.norm() * z.norm()));
    }

    #[test]
    fn membership_is_invariant_under_level_conjugation(seed in any::<u64>(), g in 1usize..4, d in 1usize..4, n in 1usize..4) {
        let a = generic_tuple(g, d, seed).unwrap();
        let mut rng = seeded(seed ^ 0x5eed);
        let x = MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, n, n)).collect()).unwrap();
        let u = haar_unitary(&mut rng, n);
        let lhs = min_eigenvalue(&a, &x).unwrap();
        let rhs = min_eigenvalue(&a, &x.conjugate(&u)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn direct_sum_point_takes_the_worse_margin(seed in any::<u64>(), g in 1usize..3, d in 1usize..4) {
        let a = generic_tuple(g, d, seed).unwrap();
        let mut rng = seeded(seed.wrapping_add(1));
        let x = MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, 2, 2)).collect()).unwrap();
        let y = MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, 1, 1)).collect()).unwrap();
        let both = min_eigenvalue(&a, &x.direct_sum(&y).unwrap()).unwrap();
        let expected = min_eigenvalue(&a, &x).unwrap().min(min_eigenvalue(&a, &y).unwrap());
        prop_assert!((both - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }

    #[test]
    fn boundary_scale_lands_on_the_boundary(seed in any::<u64>(), g in 1usize..3, d in 1usize..4, n in 1usize..3) {
        let a = generic_tuple(g, d, seed).unwrap();
        let mut rng = seeded(seed ^ 7);
        let y = MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, n, n)).collect()).unwrap();
        if let Some(t) = boundary_scale(&a, &y).unwrap() {
            let m = min_eigenvalue(&a, &y.scale(c(t, 0.0))).unwrap();
            prop_assert!(m.abs() <= 1e-9);
        }
    }

    #[test]
    fn monic_pencil_is_hermitian_and_identity_at_zero(seed in any::<u64>(), g in 1usize..4, d in 1usize..4, n in 1usize..3) {
        let a = generic_tuple(g, d, seed).unwrap();
        let zero = MatrixTuple::zeros(g, n);
        prop_assert!((eval_monic(&a, &zero).unwrap() - identity(d * n)).norm() <= 1e-15);
        let mut rng = seeded(seed);
        let x = MatrixTuple::new((0..g).map(|_| complex_gaussian(&mut rng, n, n)).collect()).unwrap();
        let l = eval_monic(&a, &x).unwrap();
        prop_assert!((&l - l.adjoint()).norm() <= 1e-12 * (1.0 + l.norm()));
    }

    #[test]
    fn polynomial_evaluation_is_multiplicative(seed in any::<u64>(), g in 1usize..3, d in 1usize..3, n in 1usize..3) {
        let p = random_crossterm(g.max(2), d, 2, seed).unwrap();
        let q = random_crossterm(g.max(2), d, 2, seed ^ 99).unwrap();
        let mut rng = seeded(seed);
        let x = MatrixTuple::new((0..g.max(2)).map(|_| complex_gaussian(&mut rng, n, n)).collect()).unwrap();
        let pq = eval_poly(&p.multiply(&q).unwrap(), &x).unwrap();
        let expected = eval_poly(&p, &x).unwrap() * eval_poly(&q, &x).unwrap();
        prop_assert!((&pq - &expected).norm() <= 1e-9 * (1.0 + expected.norm()));
        let adj = eval_poly(&p.adjoint(), &x).unwrap();
        prop_assert!((adj - eval_poly(&p, &x).unwrap().adjoint()).norm() <= 1e-9 * (1.0 + pq.norm()));
        let sum = eval_poly(&p.add(&q).unwrap(), &x).unwrap();
        prop_assert!((sum - eval_poly(&p, &x).unwrap() - eval_poly(&q, &x).unwrap()).norm() <= 1e-9 * (1.0 + pq.norm()));
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn planted_grading_commutes_correctly(seed in 1u64..10_000, g in 2usize..4, top in 1usize..3, mid in 1usize..3) {
        let tol = Tolerance::default();
        if let Ok(a) = superdiagonal_tuple(g, &[top, mid, 1], seed) {
            let cert = solve_grading(&a, &tol).unwrap().expect("plant has a grading");
            prop_assert!(grading_residual(&a, &cert.k) <= 1e-7);
            prop_assert!((&cert.k - cert.k.adjoint()).norm() <= 1e-9);
        }
    }

    #[test]
    fn unitary_absorption_on_pencil_balls(seed in 1u64..10_000, g in 1usize..3, s in 1usize..3, t in 1usize..3) {
        prop_assume!(s <= g * t && t <= g * s);
        // Some shapes (g = 1, s = t = 2) admit no irreducible plant.
        let Ok((a, _, _)) = pencil_ball_plant(g, s, t, seed) else { return Ok(()) };
        let mut rng = seeded(seed);
        for n in 1..4 {
            let x = sample_member(&a, n, &mut rng).unwrap();
            let u = haar_unitary(&mut rng, n);
            prop_assert!(min_eigenvalue(&a, &x.left_multiply(&u)).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn summand_is_contained_in_the_intersection(seed in 1u64..10_000, g in 1usize..3, d in 1usize..3) {
        let tol = Tolerance::default();
        let a = generic_tuple(g, d, seed).unwrap();
        let b = generic_tuple(g, 1, seed ^ 3).unwrap();
        let both = a.direct_sum(&b).unwrap();
        let v = includes(&both, &a, &tol).unwrap();
        prop_assert_eq!(v.status, InclusionStatus::Included);
    }
}

#[test]
fn zero_polynomial_evaluates_to_zero() {
    let p = FreeMatrixPolynomial::zero(2, 3, 2).unwrap();
    let x = MatrixTuple::zeros(2, 2);
    assert_eq!(eval_poly(&p, &x).unwrap(), CMat::zeros(4, 6));
}
