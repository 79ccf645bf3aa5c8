//! Bi-disk and Ball fixtures checked against brute-force oracles.

use freespec::ball_classifier::classify_free_circular;
use freespec::circular_classifier::classify_circular;
use freespec::generate::sample_member;
use freespec::linalg::{c, complex_gaussian, haar_unitary, spectral_norm, CMat, ONE};
use freespec::pencil_core::{membership, min_eigenvalue};
use freespec::rng::seeded;
use freespec::{MatrixTuple, Tolerance};

fn e12() -> CMat {
    let mut e = CMat::zeros(2, 2);
    e[(0, 1)] = ONE;
    e
}

fn bidisk() -> MatrixTuple {
    let z = CMat::zeros(2, 2);
    MatrixTuple::new(vec![
        freespec::linalg::block_diag(&[e12(), z.clone()]),
        freespec::linalg::block_diag(&[z, e12()]),
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
fn bidisk_membership_matches_coordinate_norms() {
    let tol = Tolerance::default();
    let a = bidisk();
    let mut rng = seeded(5);
    for _ in 0..300 {
        let x = MatrixTuple::new(
            (0..2)
                .map(|_| complex_gaussian(&mut rng, 2, 2).scale(0.7))
                .collect(),
        )
        .unwrap();
        let oracle = x.mats().iter().all(|m| spectral_norm(m).unwrap() <= 1.0);
        let margin = x
            .mats()
            .iter()
            .map(|m| (1.0 - spectral_norm(m).unwrap()).abs())
            .fold(f64::INFINITY, f64::min);
        if margin > 1e-6 {
            assert_eq!(membership(&a, &x, &tol).unwrap().member, oracle);
        }
    }
}

#[test]
fn bidisk_absorbs_unitaries_at_level_two() {
    // Monte-Carlo oracle: 10³ Haar unitaries on boundary-heavy members.
    let a = bidisk();
    let mut rng = seeded(17);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let x = sample_member(&a, 2, &mut rng).unwrap();
        let u = haar_unitary(&mut rng, 2);
        worst = worst.min(min_eigenvalue(&a, &x.left_multiply(&u)).unwrap());
    }
    assert!(worst >= -1e-9, "worst {worst}");
    let r = classify_free_circular(&a, &Tolerance::default()).unwrap();
    let form = r.form.expect("free circular");
    assert_eq!((form.s, form.t), (2, 2));
}

#[test]
fn ball_membership_is_row_contraction() {
    let tol = Tolerance::default();
    for g in 1..=3 {
        let a = ball(g);
        let mut rng = seeded(g as u64);
        for _ in 0..200 {
            let x = MatrixTuple::new(
                (0..g)
                    .map(|_| complex_gaussian(&mut rng, 2, 2).scale(0.5))
                    .collect(),
            )
            .unwrap();
            let mut row = CMat::zeros(2, 2 * g);
            for (j, m) in x.mats().iter().enumerate() {
                row.view_mut((0, 2 * j), (2, 2)).copy_from(m);
            }
            let norm = spectral_norm(&row).unwrap();
            if (norm - 1.0).abs() > 1e-6 {
                assert_eq!(membership(&a, &x, &tol).unwrap().member, norm <= 1.0);
            }
        }
    }
}

#[test]
fn ball_and_bidisk_classifications() {
    let tol = Tolerance::default();
    assert!(classify_circular(&bidisk(), &tol).unwrap().circular);
    for g in 1..=3 {
        let a = ball(g);
        assert!(classify_circular(&a, &tol).unwrap().circular);
        let r = classify_free_circular(&a, &tol).unwrap();
        let form = r.form.unwrap();
        assert_eq!((form.s, form.t), (1, g));
    }
}

#[test]
fn rotating_the_disk_stays_inside() {
    let a = ball(1);
    let mut rng = seeded(3);
    for k in 0..100 {
        let x = sample_member(&a, 1 + k % 3, &mut rng).unwrap();
        let theta = k as f64 * 0.37;
        let rot = x.scale(c(theta.cos(), theta.sin()));
        assert!(min_eigenvalue(&a, &rot).unwrap() >= -1e-9);
    }
}
